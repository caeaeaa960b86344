// AdamW with decoupled weight decay and a linear warmup/decay schedule.
#pragma once

#include "localhealth/common.hpp"

namespace localhealth::learn {

struct TrainConfig {
  int epochs = 1600;
  int batch_size = 512;
  double peak_lr = 1e-3;
  double warmup_frac = 0.2;
  double weight_decay = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  int eval_every = 1;  // epochs

  /// Desk-scale profile: at most 200 epochs.
  static TrainConfig ci();
  void validate() const;
};

struct AdamWState {
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

/// theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state, double lr,
                const TrainConfig& config);

/// Linear 0 -> peak over the first ceil(warmup_frac * total) steps, then
/// linear peak -> 0 at `total`.
double lr_schedule(std::int64_t step, std::int64_t total_steps, const TrainConfig& config);

std::int64_t warmup_steps(std::int64_t total_steps, const TrainConfig& config);

}  // namespace localhealth::learn
