#include "localhealth/train.hpp"

#include <cmath>
#include <numeric>

namespace localhealth::learn {

std::vector<double> predict(std::span<const TrainSample> samples, const HeadParams& params, bool use_adi) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(head_forward(s.v_bar, s.adi_norm, params, use_adi));
  return out;
}

std::vector<int> predict_labels(std::span<const TrainSample> samples, const HeadParams& params, bool use_adi,
                                eval::ThresholdRule rule) {
  const auto g_hat = predict(samples, params, use_adi);
  std::vector<int> years;
  std::vector<double> taus;
  for (const auto& s : samples) {
    years.push_back(s.year);
    taus.push_back(s.tau);
  }
  return eval::risk_predictions(g_hat, years, taus, rule);
}

double mse(std::span<const TrainSample> samples, const HeadParams& params, bool use_adi) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) {
    const double e = head_forward(s.v_bar, s.adi_norm, params, use_adi) - s.g;
    sum += e * e;
  }
  return sum / static_cast<double>(samples.size());
}

namespace {

double val_f1(std::span<const TrainSample> val, const HeadParams& params, const TrainOptions& options) {
  const auto preds = predict_labels(val, params, options.use_adi, options.rule);
  std::vector<int> labels;
  labels.reserve(val.size());
  for (const auto& s : val) labels.push_back(s.r);
  return eval::macro_f1(preds, labels);
}

}  // namespace

TrainResult train_head(std::span<const TrainSample> train, std::span<const TrainSample> val, int dim,
                       const TrainConfig& config, const TrainOptions& options,
                       const std::optional<HeadParams>& initial) {
  config.validate();
  if (train.empty()) throw ValidationError("train: empty training set");
  if (val.empty()) throw ValidationError("train: empty validation set");
  for (auto set : {train, val}) {
    for (const auto& s : set) {
      if (static_cast<int>(s.v_bar.size()) != dim) throw ValidationError("train: feature dim does not match head dim");
    }
  }

  HeadParams params = initial ? *initial : HeadParams::init(dim, config.seed);
  if (params.dim() != dim) throw ValidationError("train: initial parameters have the wrong dim");
  if (!initial && options.calibrate_output_bias) {
    double gap = 0.0;
    for (const auto& s : train) gap += s.g - head_forward(s.v_bar, s.adi_norm, params, options.use_adi);
    gap /= static_cast<double>(train.size());
    (options.use_adi ? params.fuse_b() : params.fc_b()) += gap;
  }

  const auto n = train.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const auto steps_per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);

  TrainResult result;
  result.total_steps = steps_per_epoch * config.epochs;
  result.best = params;

  Engine rng(mix_seed(config.seed, {0x5A3D1E}));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamWState state;
  HeadParams grads(dim);
  std::int64_t step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, rng);
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const double inv = 1.0 / static_cast<double>(end - start);
      std::fill(grads.values().begin(), grads.values().end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = train[order[k]];
        // d/dg_hat of mean (g_hat - g)^2 is 2 (g_hat - g) / batch. The
        // residual is only known after the forward pass, so accumulate the
        // unit gradient into a scratch buffer and scale it.
        const double g_hat = head_forward(s.v_bar, s.adi_norm, params, options.use_adi);
        const double e = g_hat - s.g;
        batch_loss += e * e;
        head_forward_accumulate(s.v_bar, s.adi_norm, params, options.use_adi, 2.0 * e * inv, grads);
      }
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) {
        result.trace.push_back(rec);
        throw TrainingDiverged("train: non-finite loss at epoch " + std::to_string(epoch), result.trace);
      }
      loss_sum += batch_loss;
      try {
        adamw_step(params.values(), grads.values(), state, lr_schedule(step, result.total_steps, config), config);
      } catch (const Error& e) {
        result.trace.push_back(rec);
        throw TrainingDiverged(std::string("train: ") + e.what() + " at epoch " + std::to_string(epoch), result.trace);
      }
      ++step;
    }
    rec.batch_loss = loss_sum / static_cast<double>(steps_per_epoch);

    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      rec.evaluated = true;
      rec.train_mse = mse(train, params, options.use_adi);
      rec.val_mse = mse(val, params, options.use_adi);
      if (!std::isfinite(rec.train_mse) || !std::isfinite(rec.val_mse)) {
        result.trace.push_back(rec);
        throw TrainingDiverged("train: non-finite loss at epoch " + std::to_string(epoch), result.trace);
      }
      rec.val_f1 = val_f1(val, params, options);
      if (rec.val_f1 > result.best_val_f1) {
        result.best_val_f1 = rec.val_f1;
        result.best_epoch = epoch;
        result.best = params;
      }
    }
    result.trace.push_back(rec);
  }
  return result;
}

}  // namespace localhealth::learn
