// Stratified block-group sampling and collection-query construction.
#pragma once

#include <optional>

#include "localhealth/common.hpp"

namespace localhealth::geo {

inline constexpr double kMinRadiusMiles = 2.0;
inline constexpr double kMaxRadiusMiles = 10.0;
inline constexpr int kGeneralTweetCap = 1000;

struct SampleResult {
  std::vector<BlockGroup> selected;  // grouped by stratum index, draw order within
  Diagnostics diagnostics;
};

/// Draws `per_stratum` block groups uniformly without replacement from each
/// of the 40 region x ADI-decile strata. Strata that are too small are taken
/// whole (with a diagnostic).
SampleResult stratify_and_sample(std::span<const BlockGroup> universe, int per_stratum, std::uint64_t seed);

/// sqrt(population / (pi * density)), clamped to [2, 10] miles.
double collection_radius(std::int64_t population, double county_density);

class KeywordTable {
 public:
  static KeywordTable bundled();
  static KeywordTable from_json(std::string_view json_text);

  const std::vector<std::string>& operator[](Category c) const { return lists_[index_of(c)]; }
  int version() const { return version_; }

 private:
  std::array<std::vector<std::string>, 3> lists_;
  int version_ = 0;
};

struct QuerySpec {
  std::string bg_id;
  int year = 0;
  Category category = Category::General;
  std::vector<std::string> keywords;
  LatLon center;
  double radius_miles = 0.0;
  std::optional<int> max_results;
};

QuerySpec build_query(const BlockGroup& bg, int year, Category category, const KeywordTable& keywords);

/// One JSON object, no trailing newline. Radius and coordinates are written
/// with six decimal places.
std::string to_json_line(const QuerySpec& spec);

}  // namespace localhealth::geo
