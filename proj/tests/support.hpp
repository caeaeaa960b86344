// Small dataset builders shared by the unit tests.
#pragma once

#include <string>
#include <vector>

#include "localhealth/dataset.hpp"

namespace lh_test {

using namespace localhealth;

inline BlockGroup make_bg(std::string id, Region region, int adi, std::int64_t pop = 1200, double density = 500.0) {
  BlockGroup bg;
  bg.bg_id = std::move(id);
  bg.region = region;
  bg.adi = adi;
  bg.population = pop;
  bg.centroid = {40.0, -75.0};
  bg.county_density = density;
  return bg;
}

inline std::string bg_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "BG%04d", i);
  return buf;
}

/// Raw tables for `n` block groups: regions round-robin, ADI covering every
/// decile, one tweet per (category, year) cell, g spread over [0.05, 0.30].
struct RawTables {
  std::vector<BlockGroup> bgs;
  std::vector<TweetRecord> tweets;
  OutcomeTable outcomes;
  CountTable counts;

  BuildResult build(std::vector<int> years = default_years()) const {
    return build_dataset(tweets, outcomes, counts, bgs, std::move(years));
  }
};

inline RawTables make_raw(int n, std::vector<int> years = default_years()) {
  RawTables t;
  for (int i = 0; i < n; ++i) {
    const auto id = bg_name(i);
    t.bgs.push_back(make_bg(id, kAllRegions[static_cast<std::size_t>(i % 4)], 1 + (i * 37) % 100));
    for (int y : years) {
      for (Category c : kAllCategories) {
        const auto tid = id + "-" + std::to_string(y) + "-" + std::string(to_string(c));
        t.tweets.push_back({tid, "tweet from " + id + " about things", id, y, c});
        t.counts[{id, y, c}] = c == Category::General ? 1000 : 10 + i;
      }
      t.outcomes[{id, y}] = 0.05 + 0.25 * ((i * 7 + y) % n) / std::max(1, n - 1);
    }
  }
  return t;
}

}  // namespace lh_test
