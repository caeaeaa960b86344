// Classification metrics and the rule that turns predicted outcomes into
// risk predictions.
#pragma once

#include "localhealth/common.hpp"

namespace localhealth::eval {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const { return tp + fp + fn + tn; }
};

Confusion confusion(std::span<const int> preds, std::span<const int> labels);

/// Unweighted mean of the per-class F1 over {0, 1}. A class with no true
/// and no predicted members contributes 0.
double macro_f1(std::span<const int> preds, std::span<const int> labels);
double macro_f1(const Confusion& c);

/// Fraction correct in [0, 1].
double accuracy(std::span<const int> preds, std::span<const int> labels);

/// r_hat = 1 iff g_hat >= tau.
std::vector<int> predict_risk(std::span<const double> g_hat, double tau);

enum class ThresholdRule {
  LabelThreshold,      // the evaluation year's label threshold tau
  PredictedPercentile  // 75th percentile of the predictions within each year
};

std::string_view to_string(ThresholdRule rule);
ThresholdRule parse_threshold_rule(std::string_view text);

/// Per-sample thresholding. `years` groups samples for PredictedPercentile;
/// `label_tau` carries each sample's year threshold for LabelThreshold.
std::vector<int> risk_predictions(std::span<const double> g_hat, std::span<const int> years,
                                  std::span<const double> label_tau, ThresholdRule rule);

}  // namespace localhealth::eval
