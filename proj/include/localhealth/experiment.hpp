// Per-entry feature stores and the experiment suites.
#pragma once

#include <filesystem>
#include <map>
#include <optional>

#include "localhealth/baselines.hpp"
#include "localhealth/encoding.hpp"
#include "localhealth/lteb.hpp"
#include "localhealth/splits.hpp"
#include "localhealth/train.hpp"

namespace localhealth::eval {

enum class TextCondition { MH, FI, Both, General };

std::string_view to_string(TextCondition c);
TextCondition parse_text_condition(std::string_view text);

/// Aggregated vectors for every (entry, category) of a dataset, parallel to
/// Dataset::entries.
class FeatureStore {
 public:
  /// Samples and hash-encodes every cell. `sample_seed` drives tweet sampling.
  static FeatureStore from_hashing(const Dataset& dataset, const encoding::EncoderSpec& spec,
                                   std::uint64_t sample_seed, unsigned workers = 0);

  /// Aggregates the rows of an LTEB file validated against its manifest.
  /// Every dataset cell must be present.
  static FeatureStore from_embeddings(const Dataset& dataset, const encoding::EncoderSpec& spec);

  /// Sample manifests for every dataset cell, in dataset order (MH, FI, General per entry).
  static std::vector<encoding::CellManifest> sample_manifests(const Dataset& dataset, std::uint64_t sample_seed);

  int dim() const { return dim_; }
  const std::string& encoder() const { return encoder_; }
  std::size_t size() const { return cells_.size(); }
  const std::vector<double>& cell(std::size_t entry, Category c) const { return cells_.at(entry)[index_of(c)]; }

  /// One vector per entry; Both = MH + FI.
  std::vector<std::vector<double>> text_matrix(TextCondition condition) const;

  /// Cell-mean LTEB file (flag bit 1) keyed by `manifests`. Values are
  /// stored as float32.
  lteb::File to_cell_mean_file(const Dataset& dataset, std::span<const encoding::CellManifest> manifests) const;

 private:
  int dim_ = 0;
  std::string encoder_;
  std::vector<std::array<std::vector<double>, 3>> cells_;
};

enum class ExperimentId { Set1, Set2, Set3, Set4, NortheastHoldout };

std::string_view to_string(ExperimentId id);
ExperimentId parse_experiment_id(std::string_view text);

struct ExperimentConfig {
  learn::TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  ThresholdRule rule = ThresholdRule::LabelThreshold;
  TextCondition text = TextCondition::Both;  // text input of Set2-4 and the holdout
  bool use_adi = true;                       // ADI fusion in Set2-4 and the holdout
  unsigned workers = 0;
  /// When non-empty, only conditions with these names run.
  std::vector<std::string> only_conditions;
};

struct ReportRow {
  std::string condition;
  std::uint64_t seed = 0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;  // percent
  std::optional<int> first_year;
};

struct Aggregate {
  std::string condition;
  std::optional<int> first_year;
  std::size_t n = 0;
  double f1_mean = 0.0, f1_min = 0.0, f1_max = 0.0;
  double acc_mean = 0.0, acc_min = 0.0, acc_max = 0.0;
};

struct ExperimentReport {
  ExperimentId id = ExperimentId::Set1;
  std::vector<ReportRow> rows;  // condition order, then seed order
  Diagnostics diagnostics;

  /// Per condition, in first-appearance order.
  std::vector<Aggregate> aggregates() const;
  bool is_sweep() const { return id == ExperimentId::Set3 || id == ExperimentId::Set4; }
};

/// `stores` supplies the text features: Set2 runs one condition per store,
/// every other experiment uses the first.
ExperimentReport run_experiment(ExperimentId id, const Dataset& dataset, std::span<const FeatureStore> stores,
                                const ExperimentConfig& config);

/// Head inputs for the entries of one split.
std::vector<learn::TrainSample> make_samples(const Dataset& dataset, const SplitAssignment& split, Split which,
                                             const std::vector<std::vector<double>>& features);

struct EvalResult {
  double macro_f1 = 0.0;
  double accuracy = 0.0;  // percent
  std::size_t n = 0;
};

EvalResult evaluate_predictions(std::span<const int> preds, std::span<const int> labels);

}  // namespace localhealth::eval
