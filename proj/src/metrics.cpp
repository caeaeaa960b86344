#include "localhealth/metrics.hpp"

#include <map>

namespace localhealth::eval {

Confusion confusion(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw ValidationError("metrics: prediction/label length mismatch");
  if (preds.empty()) throw ValidationError("metrics: empty input");
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] | labels[i]) & ~1) throw ValidationError("metrics: labels must be 0 or 1");
    const bool p = preds[i] != 0, y = labels[i] != 0;
    if (p && y) ++c.tp;
    else if (p && !y) ++c.fp;
    else if (!p && y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

double macro_f1(const Confusion& c) { return 0.5 * (f1(c.tp, c.fp, c.fn) + f1(c.tn, c.fn, c.fp)); }

double macro_f1(std::span<const int> preds, std::span<const int> labels) { return macro_f1(confusion(preds, labels)); }

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  const auto c = confusion(preds, labels);
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

std::vector<int> predict_risk(std::span<const double> g_hat, double tau) {
  std::vector<int> out;
  out.reserve(g_hat.size());
  for (double g : g_hat) out.push_back(g >= tau ? 1 : 0);
  return out;
}

std::string_view to_string(ThresholdRule rule) {
  return rule == ThresholdRule::LabelThreshold ? "label-threshold" : "predicted-percentile";
}

ThresholdRule parse_threshold_rule(std::string_view text) {
  if (text == "label-threshold") return ThresholdRule::LabelThreshold;
  if (text == "predicted-percentile") return ThresholdRule::PredictedPercentile;
  throw ValidationError("unknown threshold rule '" + std::string(text) + "'");
}

std::vector<int> risk_predictions(std::span<const double> g_hat, std::span<const int> years,
                                  std::span<const double> label_tau, ThresholdRule rule) {
  if (g_hat.size() != years.size() || g_hat.size() != label_tau.size()) {
    throw ValidationError("risk_predictions: length mismatch");
  }
  std::vector<int> out(g_hat.size(), 0);
  if (rule == ThresholdRule::LabelThreshold) {
    for (std::size_t i = 0; i < g_hat.size(); ++i) out[i] = g_hat[i] >= label_tau[i] ? 1 : 0;
    return out;
  }
  std::map<int, std::vector<double>> by_year;
  for (std::size_t i = 0; i < g_hat.size(); ++i) by_year[years[i]].push_back(g_hat[i]);
  std::map<int, double> tau;
  for (const auto& [year, values] : by_year) tau[year] = percentile(values, 0.75);
  for (std::size_t i = 0; i < g_hat.size(); ++i) out[i] = g_hat[i] >= tau.at(years[i]) ? 1 : 0;
  return out;
}

}  // namespace localhealth::eval
