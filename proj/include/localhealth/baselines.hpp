// Baseline models: least-squares regression on normalized counts and
// linear classifiers on aggregated text vectors.
#pragma once

#include "localhealth/optim.hpp"

namespace localhealth::learn {

using FeatureRows = std::vector<std::vector<double>>;

struct CountModel {
  std::vector<std::string> feature_names;  // one per weight, for reports
  std::vector<double> weights;
  double intercept = 0.0;
  bool rank_deficient = false;  // the ridge term was needed to solve

  double predict(std::span<const double> row) const;
};

inline constexpr double kCountRidge = 1e-10;

/// Ordinary least squares through the normal equations with a 1e-10 ridge
/// on the diagonal. Flags near-singular designs; throws when even the ridge
/// cannot produce a finite solution.
CountModel fit_count_lr(const FeatureRows& rows, std::span<const double> targets,
                        std::vector<std::string> feature_names = {});

enum class ClassifierKind { LogReg, SVM };

std::string_view to_string(ClassifierKind kind);

inline constexpr double kClassifierThreshold = 0.15;

struct LinearClassifier {
  ClassifierKind kind = ClassifierKind::LogReg;
  std::vector<double> weights;
  double bias = 0.0;
  // SVM only: probability = sigmoid(platt_a * margin + platt_b).
  double platt_a = 1.0;
  double platt_b = 0.0;
  double threshold = kClassifierThreshold;

  double margin(std::span<const double> row) const;
  /// Sigmoid output for LogReg, Platt-calibrated margin for SVM.
  double probability(std::span<const double> row) const;
  int predict(std::span<const double> row) const { return probability(row) >= threshold ? 1 : 0; }
};

double sigmoid(double z);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};

/// Mean binary cross-entropy of sigmoid(w.x + b) and its gradient.
LossAndGrad logreg_loss_and_grad(std::span<const double> w, double b, const FeatureRows& rows,
                                 std::span<const int> labels);

/// Mean hinge loss max(0, 1 - y(w.x + b)) with y in {-1, +1}, and a subgradient.
LossAndGrad hinge_loss_and_grad(std::span<const double> w, double b, const FeatureRows& rows,
                                std::span<const int> labels);

/// Trains with AdamW under the same schedule and batching as the head
/// (config.epochs, config.batch_size). SVM weight regularisation comes from
/// the optimizer's decoupled weight decay. Throws on single-class labels.
LinearClassifier fit_classifier(ClassifierKind kind, const FeatureRows& rows, std::span<const int> labels,
                                const TrainConfig& config, double threshold = kClassifierThreshold);

/// Platt scaling: fits (a, b) minimising the cross-entropy of
/// sigmoid(a * margin + b) against smoothed labels.
std::pair<double, double> fit_platt(std::span<const double> margins, std::span<const int> labels);

}  // namespace localhealth::learn
