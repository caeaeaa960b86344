// The regression head: a single-channel 1-D convolution (kernel 16, stride 4)
// with ReLU over the aggregated tweet vector, a fully connected layer to a
// scalar, and an optional linear fusion of that scalar with ADI/100.
#pragma once

#include "localhealth/common.hpp"

namespace localhealth::learn {

inline constexpr int kKernel = 16;
inline constexpr int kStride = 4;

/// Number of convolution windows, floor((dim - 16) / 4) + 1.
int conv_output_len(int dim);

/// Trainable parameters: 16 + 1 (conv) + L + 1 (fc) + 2 + 1 (fusion).
int param_count(int dim);

/// All head parameters in one contiguous buffer:
///   [conv_w(16) | conv_b | fc_w(L) | fc_b | fuse_w(2) | fuse_b]
/// Gradients use the same type and layout.
class HeadParams {
 public:
  HeadParams() = default;
  explicit HeadParams(int dim);

  /// conv_w, fc_w and fc_b ~ uniform(-1/sqrt(fan_in), 1/sqrt(fan_in));
  /// conv_b = 0; fusion starts at fuse_w = (1, 0), fuse_b = 0.
  static HeadParams init(int dim, std::uint64_t seed);

  int dim() const { return dim_; }
  int conv_len() const { return conv_len_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> conv_w() { return {values_.data(), kKernel}; }
  double& conv_b() { return values_[kKernel]; }
  std::span<double> fc_w() { return {values_.data() + kKernel + 1, static_cast<std::size_t>(conv_len_)}; }
  double& fc_b() { return values_[fc_offset() + conv_len_]; }
  std::span<double> fuse_w() { return {values_.data() + fuse_offset(), 2}; }
  double& fuse_b() { return values_[fuse_offset() + 2]; }

  std::span<const double> conv_w() const { return {values_.data(), kKernel}; }
  double conv_b() const { return values_[kKernel]; }
  std::span<const double> fc_w() const {
    return {values_.data() + kKernel + 1, static_cast<std::size_t>(conv_len_)};
  }
  double fc_b() const { return values_[fc_offset() + conv_len_]; }
  std::span<const double> fuse_w() const { return {values_.data() + fuse_offset(), 2}; }
  double fuse_b() const { return values_[fuse_offset() + 2]; }

  bool operator==(const HeadParams&) const = default;

 private:
  std::size_t fc_offset() const { return kKernel + 1; }
  std::size_t fuse_offset() const { return fc_offset() + static_cast<std::size_t>(conv_len_) + 1; }

  int dim_ = 0;
  int conv_len_ = 0;
  std::vector<double> values_;
};

double head_forward(std::span<const double> v_bar, double adi_norm, const HeadParams& params, bool use_adi);

/// Exact gradient of the output w.r.t. every parameter, scaled by grad_out.
/// The ReLU derivative at 0 is taken as 0.
HeadParams head_backward(std::span<const double> v_bar, double adi_norm, const HeadParams& params, bool use_adi,
                         double grad_out);

/// Forward pass that also adds grad_out * d(output)/d(params) into `grads`.
/// Returns the forward output.
double head_forward_accumulate(std::span<const double> v_bar, double adi_norm, const HeadParams& params, bool use_adi,
                               double grad_out, HeadParams& grads);

/// The L convolution pre-activations (before ReLU).
std::vector<double> conv_preactivations(std::span<const double> v_bar, const HeadParams& params);

}  // namespace localhealth::learn
