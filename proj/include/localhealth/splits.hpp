// Train/validation/test assignments for the forecasting and spatial
// extrapolation regimes, plus data-availability windows.
#pragma once

#include "localhealth/dataset.hpp"

namespace localhealth {

enum class Split : std::uint8_t { Train, Val, Test, Unassigned };

std::string_view to_string(Split split);

/// One Split per dataset entry, parallel to Dataset::entries.
struct SplitAssignment {
  std::vector<Split> entry_split;
  Diagnostics diagnostics;

  std::size_t count(Split s) const;
  std::vector<std::size_t> indices(Split s) const;
};

struct ForecastingOptions {
  double val_fraction = 0.2;
  std::optional<int> test_year;  // defaults to the last dataset year
};

/// Test = every entry of the final year. Earlier entries are split into
/// Train/Val, stratified by region x ADI decile.
SplitAssignment forecasting_split(const Dataset& dataset, std::uint64_t seed, ForecastingOptions options = {});

struct SpatialOptions {
  double test_fraction = 320.0 / 765.0;
  double train_fraction_of_rest = 0.75;
  std::optional<int> test_year;
};

/// Partitions block groups (not entries) into Test/Train/Val with
/// proportional allocation per region x ADI decile. Test block groups
/// contribute only their final-year entry (as Test); every other year of
/// theirs is Unassigned.
SplitAssignment spatial_split(const Dataset& dataset, std::uint64_t seed, SpatialOptions options = {});

/// Holds out every block group of one region: its final-year entries are
/// Test. The remaining block groups are split Train/Val by
/// `train_fraction`, stratified as in spatial_split.
SplitAssignment region_holdout_split(const Dataset& dataset, Region held_out, std::uint64_t seed,
                                     double train_fraction = 0.75);

/// Drops Train/Val entries with year < first_year. Test is untouched.
SplitAssignment availability_window(const Dataset& dataset, const SplitAssignment& split, int first_year);

}  // namespace localhealth
