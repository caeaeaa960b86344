// The joined (block group, year) dataset: tweets, counts, outcome g and risk
// label r per cell, plus the cleaning rule that decides which block groups
// survive the join.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "localhealth/common.hpp"

namespace localhealth {

using OutcomeTable = std::map<std::pair<std::string, int>, double>;
using CountTable = std::map<std::tuple<std::string, int, Category>, std::int64_t>;

inline std::vector<int> default_years() { return {2015, 2016, 2017, 2018, 2019}; }

struct DatasetEntry {
  std::string bg_id;
  int year = 0;
  std::array<std::vector<TweetRecord>, 3> tweets;  // indexed by Category
  std::array<std::int64_t, 3> counts{};            // uncapped count-query totals
  double g = 0.0;                                  // outcome as a fraction
  int r = 0;                                       // 1 = high risk

  const std::vector<TweetRecord>& cell(Category c) const { return tweets[index_of(c)]; }
  std::int64_t count(Category c) const { return counts[index_of(c)]; }
};

struct RiskThreshold {
  int year = 0;
  double tau = 0.0;
};

struct Dataset {
  std::vector<BlockGroup> bgs;        // retained, sorted by bg_id
  std::vector<int> years;             // ascending
  std::vector<DatasetEntry> entries;  // sorted by (bg_id, year)
  std::map<int, RiskThreshold> thresholds;

  bool empty() const { return entries.empty(); }
  bool labeled() const { return !thresholds.empty(); }
  const BlockGroup& block_group(std::string_view bg_id) const;
  const DatasetEntry& entry(std::string_view bg_id, int year) const;
  std::optional<std::size_t> find_entry(std::string_view bg_id, int year) const;
  double tau(int year) const;
};

struct BuildStats {
  std::size_t universe = 0;
  std::size_t retained = 0;
  std::size_t dropped_missing_outcome = 0;
  std::size_t dropped_empty_cell = 0;
  std::size_t duplicate_tweets = 0;
  std::size_t unknown_bg_tweets = 0;
  std::size_t out_of_range_year_tweets = 0;
  std::size_t missing_counts = 0;
  Diagnostics diagnostics;
};

struct BuildResult {
  Dataset dataset;
  BuildStats stats;
};

/// Joins tweets, outcomes and counts onto the block-group table.
///
/// A block group is retained iff it has an outcome for every year and at
/// least one tweet in every (category, year) cell. Duplicate tweet ids are
/// dropped (first occurrence wins), tweets for unknown block groups are
/// skipped; both are counted. Outcomes outside [0, 1] are a hard error.
/// When at least four block groups survive, every year is risk-labeled.
BuildResult build_dataset(std::span<const TweetRecord> tweets, const OutcomeTable& outcomes,
                          const CountTable& counts, std::span<const BlockGroup> bgs,
                          std::vector<int> years = default_years());

struct RiskLabels {
  RiskThreshold threshold;
  std::vector<std::pair<std::string, int>> labels;  // (bg_id, r) in dataset order
};

/// tau = 75th percentile of g over the year's block groups; r = 1 iff g >= tau.
RiskLabels label_risk(const Dataset& dataset, int year);

struct NormalizedCounts {
  double mh = 0.0;
  double fi = 0.0;
};

/// MH and FI counts divided by the uncapped general count.
NormalizedCounts normalized_counts(const DatasetEntry& entry);

}  // namespace localhealth
