#include "localhealth/splits.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace localhealth {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: return "unassigned";
  }
  return "unassigned";
}

std::size_t SplitAssignment::count(Split s) const {
  return static_cast<std::size_t>(std::count(entry_split.begin(), entry_split.end(), s));
}

std::vector<std::size_t> SplitAssignment::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entry_split.size(); ++i) {
    if (entry_split[i] == s) out.push_back(i);
  }
  return out;
}

namespace {

void require_years(const Dataset& dataset) {
  if (dataset.empty()) throw ValidationError("split: dataset is empty");
  if (dataset.years.size() < 2) throw ValidationError("split: dataset needs at least two years");
}

int resolve_test_year(const Dataset& dataset, std::optional<int> test_year) {
  int y = test_year.value_or(dataset.years.back());
  if (!std::binary_search(dataset.years.begin(), dataset.years.end(), y)) {
    throw ValidationError("split: test year " + std::to_string(y) + " not in dataset");
  }
  return y;
}

// Groups item ids by stratum in a fixed order (stratum index, then input order).
template <typename Item>
std::vector<std::vector<Item>> group_by_stratum(const std::vector<Item>& items,
                                                const std::function<int(const Item&)>& stratum) {
  std::vector<std::vector<Item>> groups(kNumStrata);
  for (const auto& item : items) groups[static_cast<std::size_t>(stratum(item))].push_back(item);
  return groups;
}

// Shuffles every group with its own stream and takes `take[i]` items off the front.
template <typename Item>
std::pair<std::vector<Item>, std::vector<std::vector<Item>>> draw_per_stratum(
    std::vector<std::vector<Item>> groups, const std::vector<std::size_t>& take, std::uint64_t seed,
    std::uint64_t salt) {
  std::vector<Item> drawn;
  for (std::size_t s = 0; s < groups.size(); ++s) {
    Engine rng(mix_seed(seed, {salt, s}));
    shuffle(groups[s], rng);
    for (std::size_t i = 0; i < take[s]; ++i) drawn.push_back(groups[s][i]);
    groups[s].erase(groups[s].begin(), groups[s].begin() + static_cast<std::ptrdiff_t>(take[s]));
  }
  return {std::move(drawn), std::move(groups)};
}

template <typename Item>
std::vector<std::size_t> sizes_of(const std::vector<std::vector<Item>>& groups) {
  std::vector<std::size_t> sizes;
  for (const auto& g : groups) sizes.push_back(g.size());
  return sizes;
}

std::size_t rounded(double x) { return static_cast<std::size_t>(std::llround(x)); }

// Splits block groups into (selected, rest) with a proportional per-stratum draw.
std::pair<std::vector<std::string>, std::vector<std::string>> stratified_bg_draw(
    const Dataset& dataset, const std::vector<std::string>& bg_ids, double fraction, std::uint64_t seed,
    std::uint64_t salt, Diagnostics& diag) {
  auto groups = group_by_stratum<std::string>(
      bg_ids, [&](const std::string& id) { return stratum_index(stratum_of(dataset.block_group(id))); });
  const auto sizes = sizes_of(groups);
  const std::size_t total = rounded(fraction * static_cast<double>(bg_ids.size()));
  auto take = allocate_proportional(sizes, total);
  std::size_t allocated = 0;
  for (auto t : take) allocated += t;
  if (allocated != total) {
    diag.push_back("stratified draw allocated " + std::to_string(allocated) + " of " + std::to_string(total) +
                   " requested block groups (nearest-proportion rounding)");
  }
  auto [drawn, rest_groups] = draw_per_stratum(std::move(groups), take, seed, salt);
  std::vector<std::string> rest;
  for (auto& g : rest_groups) rest.insert(rest.end(), g.begin(), g.end());
  return {std::move(drawn), std::move(rest)};
}

SplitAssignment assign_by_bg(const Dataset& dataset, const std::vector<std::string>& test_bgs,
                             const std::vector<std::string>& train_bgs, const std::vector<std::string>& val_bgs,
                             int test_year) {
  std::unordered_map<std::string, Split> role;
  for (const auto& id : test_bgs) role[id] = Split::Test;
  for (const auto& id : train_bgs) role[id] = Split::Train;
  for (const auto& id : val_bgs) role[id] = Split::Val;
  SplitAssignment out;
  out.entry_split.resize(dataset.entries.size(), Split::Unassigned);
  for (std::size_t i = 0; i < dataset.entries.size(); ++i) {
    const auto& e = dataset.entries[i];
    auto it = role.find(e.bg_id);
    if (it == role.end()) continue;
    if (it->second == Split::Test) {
      out.entry_split[i] = e.year == test_year ? Split::Test : Split::Unassigned;
    } else {
      out.entry_split[i] = it->second;
    }
  }
  return out;
}

std::vector<std::string> bg_ids_of(const Dataset& dataset) {
  std::vector<std::string> ids;
  for (const auto& bg : dataset.bgs) ids.push_back(bg.bg_id);
  return ids;
}

}  // namespace

SplitAssignment forecasting_split(const Dataset& dataset, std::uint64_t seed, ForecastingOptions options) {
  require_years(dataset);
  const int test_year = resolve_test_year(dataset, options.test_year);
  SplitAssignment out;
  out.entry_split.assign(dataset.entries.size(), Split::Unassigned);

  std::vector<std::size_t> dev;
  for (std::size_t i = 0; i < dataset.entries.size(); ++i) {
    const auto& e = dataset.entries[i];
    if (e.year == test_year) {
      out.entry_split[i] = Split::Test;
    } else if (e.year < test_year) {
      dev.push_back(i);
    }
  }
  auto groups = group_by_stratum<std::size_t>(dev, [&](const std::size_t& i) {
    return stratum_index(stratum_of(dataset.block_group(dataset.entries[i].bg_id)));
  });
  const std::size_t n_val = rounded(options.val_fraction * static_cast<double>(dev.size()));
  auto take = allocate_proportional(sizes_of(groups), n_val);
  auto [val, train_groups] = draw_per_stratum(std::move(groups), take, seed, 0xF0CA57);
  for (auto i : val) out.entry_split[i] = Split::Val;
  for (const auto& g : train_groups) {
    for (auto i : g) out.entry_split[i] = Split::Train;
  }
  return out;
}

SplitAssignment spatial_split(const Dataset& dataset, std::uint64_t seed, SpatialOptions options) {
  require_years(dataset);
  const int test_year = resolve_test_year(dataset, options.test_year);
  Diagnostics diag;
  auto [test, rest] = stratified_bg_draw(dataset, bg_ids_of(dataset), options.test_fraction, seed, 0x5A71A1, diag);
  auto [val, train] =
      stratified_bg_draw(dataset, rest, 1.0 - options.train_fraction_of_rest, seed, 0x7A1DA7, diag);
  auto out = assign_by_bg(dataset, test, train, val, test_year);
  out.diagnostics = std::move(diag);
  return out;
}

SplitAssignment region_holdout_split(const Dataset& dataset, Region held_out, std::uint64_t seed,
                                     double train_fraction) {
  require_years(dataset);
  const int test_year = dataset.years.back();
  std::vector<std::string> test, others;
  for (const auto& bg : dataset.bgs) (bg.region == held_out ? test : others).push_back(bg.bg_id);
  if (test.empty()) throw ValidationError("region holdout: no block groups in " + std::string(to_string(held_out)));
  if (others.empty()) throw ValidationError("region holdout: no block groups outside the held-out region");
  Diagnostics diag;
  auto [val, train] = stratified_bg_draw(dataset, others, 1.0 - train_fraction, seed, 0x4E0A57, diag);
  auto out = assign_by_bg(dataset, test, train, val, test_year);
  out.diagnostics = std::move(diag);
  return out;
}

SplitAssignment availability_window(const Dataset& dataset, const SplitAssignment& split, int first_year) {
  if (!std::binary_search(dataset.years.begin(), dataset.years.end(), first_year)) {
    throw ValidationError("availability window: first year " + std::to_string(first_year) + " not in dataset");
  }
  if (split.entry_split.size() != dataset.entries.size()) {
    throw ValidationError("availability window: split does not match dataset");
  }
  SplitAssignment out = split;
  for (std::size_t i = 0; i < out.entry_split.size(); ++i) {
    auto& s = out.entry_split[i];
    if ((s == Split::Train || s == Split::Val) && dataset.entries[i].year < first_year) s = Split::Unassigned;
  }
  if (out.count(Split::Train) == 0) {
    throw ValidationError("availability window from " + std::to_string(first_year) + " leaves no training entries");
  }
  return out;
}

}  // namespace localhealth
