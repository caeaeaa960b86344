#include "localhealth/optim.hpp"

#include <cmath>

namespace localhealth::learn {

TrainConfig TrainConfig::ci() {
  TrainConfig c;
  c.epochs = 200;
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
  if (!(warmup_frac > 0.0 && warmup_frac < 1.0)) throw ValidationError("train config: warmup_frac must be in (0, 1)");
  if (peak_lr < 0.0) throw ValidationError("train config: peak_lr must be non-negative");
  if (weight_decay < 0.0) throw ValidationError("train config: weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("train config: betas must be in [0, 1)");
  }
  if (!(eps > 0.0)) throw ValidationError("train config: eps must be positive");
  if (eval_every < 1) throw ValidationError("train config: eval_every must be >= 1");
}

void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state, double lr,
                const TrainConfig& config) {
  if (params.size() != grads.size()) throw ValidationError("adamw: parameter/gradient size mismatch");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ValidationError("adamw: optimizer state size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw Error("adamw: non-finite gradient");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * (m_hat / (std::sqrt(v_hat) + config.eps) + config.weight_decay * params[i]);
  }
}

std::int64_t warmup_steps(std::int64_t total_steps, const TrainConfig& config) {
  // Slack keeps e.g. 0.2 * 400 from rounding up to 81.
  return static_cast<std::int64_t>(std::ceil(config.warmup_frac * static_cast<double>(total_steps) - 1e-9));
}

double lr_schedule(std::int64_t step, std::int64_t total_steps, const TrainConfig& config) {
  if (total_steps <= 0 || step <= 0 || step >= total_steps) return 0.0;
  const std::int64_t warmup = warmup_steps(total_steps, config);
  if (step <= warmup) return config.peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  return config.peak_lr * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup);
}

}  // namespace localhealth::learn
