// Mini-batch MSE training of the head with best-epoch selection on
// validation macro-F1.
#pragma once

#include <optional>

#include "localhealth/head.hpp"
#include "localhealth/metrics.hpp"
#include "localhealth/optim.hpp"

namespace localhealth::learn {

struct TrainSample {
  std::span<const double> v_bar;
  double adi_norm = 0.0;  // ADI / 100
  double g = 0.0;
  int r = 0;
  double tau = 0.0;  // label threshold of the sample's year
  int year = 0;
};

struct TrainOptions {
  bool use_adi = false;
  eval::ThresholdRule rule = eval::ThresholdRule::LabelThreshold;
  /// Shift the output bias so the initial mean prediction equals the mean
  /// training target. Ignored when initial parameters are supplied.
  bool calibrate_output_bias = true;
};

struct EpochRecord {
  int epoch = 0;            // 1-based
  double batch_loss = 0.0;  // mean of the epoch's mini-batch losses
  double train_mse = 0.0;   // full pass after the epoch's updates
  double val_mse = 0.0;
  double val_f1 = 0.0;
  bool evaluated = false;   // false on epochs skipped by eval_every
};

struct TrainResult {
  HeadParams best;
  int best_epoch = 0;
  double best_val_f1 = -1.0;
  std::int64_t total_steps = 0;
  std::vector<EpochRecord> trace;
};

/// Raised when a loss or gradient becomes non-finite. Holds the trace up to
/// the failing epoch.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, std::vector<EpochRecord> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<EpochRecord>& trace() const { return trace_; }

 private:
  std::vector<EpochRecord> trace_;
};

/// Trains from HeadParams::init(dim, config.seed) unless `initial` is given.
/// Batches are reshuffled every epoch from a stream seeded by config.seed.
/// The returned parameters are those of the evaluated epoch with the highest
/// validation macro-F1; ties keep the earlier epoch.
TrainResult train_head(std::span<const TrainSample> train, std::span<const TrainSample> val, int dim,
                       const TrainConfig& config, const TrainOptions& options = {},
                       const std::optional<HeadParams>& initial = std::nullopt);

std::vector<double> predict(std::span<const TrainSample> samples, const HeadParams& params, bool use_adi);

/// Risk predictions for `samples` under `rule`.
std::vector<int> predict_labels(std::span<const TrainSample> samples, const HeadParams& params, bool use_adi,
                                eval::ThresholdRule rule);

double mse(std::span<const TrainSample> samples, const HeadParams& params, bool use_adi);

}  // namespace localhealth::learn
