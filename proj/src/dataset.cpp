#include "localhealth/dataset.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace localhealth {

const BlockGroup& Dataset::block_group(std::string_view bg_id) const {
  auto it = std::lower_bound(bgs.begin(), bgs.end(), bg_id,
                             [](const BlockGroup& bg, std::string_view id) { return bg.bg_id < id; });
  if (it == bgs.end() || it->bg_id != bg_id) {
    throw ValidationError("block group '" + std::string(bg_id) + "' not in dataset");
  }
  return *it;
}

std::optional<std::size_t> Dataset::find_entry(std::string_view bg_id, int year) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), std::pair{bg_id, year},
                             [](const DatasetEntry& e, const std::pair<std::string_view, int>& key) {
                               return std::pair<std::string_view, int>{e.bg_id, e.year} < key;
                             });
  if (it == entries.end() || it->bg_id != bg_id || it->year != year) return std::nullopt;
  return static_cast<std::size_t>(it - entries.begin());
}

const DatasetEntry& Dataset::entry(std::string_view bg_id, int year) const {
  auto idx = find_entry(bg_id, year);
  if (!idx) {
    throw ValidationError("no entry for (" + std::string(bg_id) + ", " + std::to_string(year) + ")");
  }
  return entries[*idx];
}

double Dataset::tau(int year) const {
  auto it = thresholds.find(year);
  if (it == thresholds.end()) throw ValidationError("no risk threshold for year " + std::to_string(year));
  return it->second.tau;
}

BuildResult build_dataset(std::span<const TweetRecord> tweets, const OutcomeTable& outcomes,
                          const CountTable& counts, std::span<const BlockGroup> bgs, std::vector<int> years) {
  if (years.empty()) throw ValidationError("build_dataset: no years requested");
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());

  for (const auto& [key, value] : outcomes) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw ValidationError("outcome for (" + key.first + ", " + std::to_string(key.second) + ") = " +
                            std::to_string(value) + " outside [0, 1]");
    }
  }

  BuildResult result;
  BuildStats& stats = result.stats;

  std::vector<BlockGroup> universe(bgs.begin(), bgs.end());
  std::sort(universe.begin(), universe.end(),
            [](const BlockGroup& a, const BlockGroup& b) { return a.bg_id < b.bg_id; });
  for (std::size_t i = 1; i < universe.size(); ++i) {
    if (universe[i].bg_id == universe[i - 1].bg_id) {
      throw ValidationError("duplicate bg_id '" + universe[i].bg_id + "' in block-group table");
    }
  }
  for (const auto& bg : universe) validate(bg);
  stats.universe = universe.size();

  std::unordered_map<std::string, std::size_t> bg_pos;
  for (std::size_t i = 0; i < universe.size(); ++i) bg_pos.emplace(universe[i].bg_id, i);
  std::unordered_map<int, std::size_t> year_pos;
  for (std::size_t i = 0; i < years.size(); ++i) year_pos.emplace(years[i], i);

  // cells[bg][year][category]
  using Cell = std::vector<TweetRecord>;
  std::vector<std::vector<std::array<Cell, 3>>> cells(universe.size(),
                                                      std::vector<std::array<Cell, 3>>(years.size()));
  std::unordered_set<std::string> seen_ids;
  seen_ids.reserve(tweets.size());
  for (const auto& t : tweets) {
    if (!seen_ids.insert(t.tweet_id).second) {
      if (stats.duplicate_tweets < 10) stats.diagnostics.push_back("duplicate tweet_id '" + t.tweet_id + "' rejected");
      ++stats.duplicate_tweets;
      continue;
    }
    auto b = bg_pos.find(t.bg_id);
    if (b == bg_pos.end()) {
      ++stats.unknown_bg_tweets;
      continue;
    }
    auto y = year_pos.find(t.year);
    if (y == year_pos.end()) {
      ++stats.out_of_range_year_tweets;
      continue;
    }
    if (t.text.empty()) throw ValidationError("tweet '" + t.tweet_id + "' has empty text");
    cells[b->second][y->second][index_of(t.category)].push_back(t);
  }
  if (stats.duplicate_tweets > 0) {
    stats.diagnostics.push_back(std::to_string(stats.duplicate_tweets) + " duplicate tweet ids rejected");
  }
  if (stats.unknown_bg_tweets > 0) {
    stats.diagnostics.push_back(std::to_string(stats.unknown_bg_tweets) + " tweets skipped: unknown bg_id");
  }

  Dataset& ds = result.dataset;
  ds.years = years;
  for (std::size_t b = 0; b < universe.size(); ++b) {
    const auto& bg = universe[b];
    bool has_outcomes = std::all_of(years.begin(), years.end(),
                                    [&](int y) { return outcomes.contains({bg.bg_id, y}); });
    if (!has_outcomes) {
      ++stats.dropped_missing_outcome;
      continue;
    }
    bool all_cells = true;
    for (std::size_t y = 0; y < years.size() && all_cells; ++y) {
      for (Category c : kAllCategories) all_cells = all_cells && !cells[b][y][index_of(c)].empty();
    }
    if (!all_cells) {
      ++stats.dropped_empty_cell;
      continue;
    }
    ds.bgs.push_back(bg);
    for (std::size_t y = 0; y < years.size(); ++y) {
      DatasetEntry e;
      e.bg_id = bg.bg_id;
      e.year = years[y];
      e.g = outcomes.at({bg.bg_id, years[y]});
      for (Category c : kAllCategories) {
        auto& cell = cells[b][y][index_of(c)];
        auto it = counts.find({bg.bg_id, years[y], c});
        if (it == counts.end()) {
          ++stats.missing_counts;
          e.counts[index_of(c)] = static_cast<std::int64_t>(cell.size());
        } else {
          e.counts[index_of(c)] = it->second;
        }
        e.tweets[index_of(c)] = std::move(cell);
      }
      ds.entries.push_back(std::move(e));
    }
  }
  if (stats.missing_counts > 0) {
    stats.diagnostics.push_back(std::to_string(stats.missing_counts) +
                                " cells missing from the count table; archived tweet count used");
  }
  stats.retained = ds.bgs.size();

  if (ds.bgs.size() >= 4) {
    for (int year : years) {
      RiskLabels labels = label_risk(ds, year);
      ds.thresholds[year] = labels.threshold;
      for (const auto& [bg_id, r] : labels.labels) ds.entries[*ds.find_entry(bg_id, year)].r = r;
    }
  } else {
    stats.diagnostics.push_back("fewer than 4 block groups retained; risk labels not assigned");
  }
  return result;
}

RiskLabels label_risk(const Dataset& dataset, int year) {
  std::vector<const DatasetEntry*> cell;
  for (const auto& e : dataset.entries) {
    if (e.year == year) cell.push_back(&e);
  }
  if (cell.empty()) throw ValidationError("label_risk: no entries for year " + std::to_string(year));
  if (cell.size() < 4) {
    throw ValidationError("label_risk: need at least 4 block groups for year " + std::to_string(year));
  }
  std::vector<double> g;
  g.reserve(cell.size());
  for (const auto* e : cell) g.push_back(e->g);

  RiskLabels out;
  out.threshold = {year, percentile(g, 0.75)};
  for (const auto* e : cell) out.labels.emplace_back(e->bg_id, e->g >= out.threshold.tau ? 1 : 0);
  return out;
}

NormalizedCounts normalized_counts(const DatasetEntry& entry) {
  const auto general = entry.count(Category::General);
  if (general <= 0) {
    throw ValidationError("normalized_counts: zero general count for (" + entry.bg_id + ", " +
                          std::to_string(entry.year) + ")");
  }
  return {static_cast<double>(entry.count(Category::MH)) / static_cast<double>(general),
          static_cast<double>(entry.count(Category::FI)) / static_cast<double>(general)};
}

}  // namespace localhealth
