#include "localhealth/head.hpp"

#include <cmath>

namespace localhealth::learn {

int conv_output_len(int dim) {
  if (dim < kKernel) {
    throw ValidationError("head: dim " + std::to_string(dim) + " is smaller than the kernel width 16");
  }
  return (dim - kKernel) / kStride + 1;
}

int param_count(int dim) { return kKernel + 1 + conv_output_len(dim) + 1 + 3; }

HeadParams::HeadParams(int dim)
    : dim_(dim), conv_len_(conv_output_len(dim)), values_(static_cast<std::size_t>(param_count(dim)), 0.0) {}

HeadParams HeadParams::init(int dim, std::uint64_t seed) {
  HeadParams p(dim);
  Engine rng(mix_seed(seed, {0x1417}));
  auto fill = [&](std::span<double> s, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (double& x : s) x = uniform_real(rng, -bound, bound);
  };
  fill(p.conv_w(), kKernel);
  fill(p.fc_w(), p.conv_len());
  fill({&p.fc_b(), 1}, p.conv_len());
  // conv_b = 0 keeps the shared-bias ReLU alive on small inputs; the fusion
  // layer starts as the identity on s.
  p.fuse_w()[0] = 1.0;
  return p;
}

namespace {

void check_input(std::span<const double> v_bar, const HeadParams& params) {
  if (params.dim() < kKernel) throw ValidationError("head: uninitialised parameters");
  if (static_cast<int>(v_bar.size()) != params.dim()) {
    throw ValidationError("head: input dim " + std::to_string(v_bar.size()) + " does not match head dim " +
                          std::to_string(params.dim()));
  }
}

double conv_at(std::span<const double> v_bar, std::span<const double> w, double b, int i) {
  double z = b;
  const double* x = v_bar.data() + static_cast<std::size_t>(i) * kStride;
  for (int j = 0; j < kKernel; ++j) z += w[j] * x[j];
  return z;
}

}  // namespace

std::vector<double> conv_preactivations(std::span<const double> v_bar, const HeadParams& params) {
  check_input(v_bar, params);
  std::vector<double> z(static_cast<std::size_t>(params.conv_len()));
  for (int i = 0; i < params.conv_len(); ++i) z[i] = conv_at(v_bar, params.conv_w(), params.conv_b(), i);
  return z;
}

double head_forward(std::span<const double> v_bar, double adi_norm, const HeadParams& params, bool use_adi) {
  check_input(v_bar, params);
  const auto cw = params.conv_w();
  const auto fw = params.fc_w();
  double s = params.fc_b();
  for (int i = 0; i < params.conv_len(); ++i) {
    const double z = conv_at(v_bar, cw, params.conv_b(), i);
    if (z > 0.0) s += fw[i] * z;
  }
  if (!use_adi) return s;
  return params.fuse_w()[0] * s + params.fuse_w()[1] * adi_norm + params.fuse_b();
}

double head_forward_accumulate(std::span<const double> v_bar, double adi_norm, const HeadParams& params, bool use_adi,
                               double grad_out, HeadParams& grads) {
  check_input(v_bar, params);
  if (grads.dim() != params.dim()) grads = HeadParams(params.dim());
  const auto cw = params.conv_w();
  const auto fw = params.fc_w();
  const int len = params.conv_len();

  thread_local std::vector<double> h;
  h.assign(static_cast<std::size_t>(len), 0.0);
  double s = params.fc_b();
  for (int i = 0; i < len; ++i) {
    const double z = conv_at(v_bar, cw, params.conv_b(), i);
    h[i] = z > 0.0 ? z : 0.0;
    s += fw[i] * h[i];
  }

  double out = s;
  double ds = grad_out;
  if (use_adi) {
    const auto uw = params.fuse_w();
    out = uw[0] * s + uw[1] * adi_norm + params.fuse_b();
    grads.fuse_w()[0] += grad_out * s;
    grads.fuse_w()[1] += grad_out * adi_norm;
    grads.fuse_b() += grad_out;
    ds = grad_out * uw[0];
  }

  grads.fc_b() += ds;
  auto gfw = grads.fc_w();
  auto gcw = grads.conv_w();
  double gcb = 0.0;
  for (int i = 0; i < len; ++i) {
    gfw[i] += ds * h[i];
    if (h[i] <= 0.0) continue;
    const double dz = ds * fw[i];
    gcb += dz;
    const double* x = v_bar.data() + static_cast<std::size_t>(i) * kStride;
    for (int j = 0; j < kKernel; ++j) gcw[j] += dz * x[j];
  }
  grads.conv_b() += gcb;
  return out;
}

HeadParams head_backward(std::span<const double> v_bar, double adi_norm, const HeadParams& params, bool use_adi,
                         double grad_out) {
  HeadParams grads(params.dim());
  head_forward_accumulate(v_bar, adi_norm, params, use_adi, grad_out, grads);
  return grads;
}

}  // namespace localhealth::learn
