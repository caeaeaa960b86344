#include "localhealth/geo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "localhealth/resources.hpp"

namespace localhealth::geo {

SampleResult stratify_and_sample(std::span<const BlockGroup> universe, int per_stratum, std::uint64_t seed) {
  if (universe.empty()) throw ValidationError("stratify_and_sample: empty universe");
  if (per_stratum < 1) throw ValidationError("stratify_and_sample: per_stratum must be >= 1");

  std::vector<std::vector<const BlockGroup*>> strata(kNumStrata);
  std::unordered_set<std::string_view> ids;
  for (const auto& bg : universe) {
    validate(bg);
    if (!ids.insert(bg.bg_id).second) throw ValidationError("stratify_and_sample: duplicate bg_id " + bg.bg_id);
    strata[static_cast<std::size_t>(stratum_index(stratum_of(bg)))].push_back(&bg);
  }

  SampleResult out;
  const auto want = static_cast<std::size_t>(per_stratum);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& members = strata[s];
    // Input order must not leak into the draw.
    std::sort(members.begin(), members.end(),
              [](const BlockGroup* a, const BlockGroup* b) { return a->bg_id < b->bg_id; });
    if (members.size() < want) {
      const Stratum st{static_cast<Region>(s / 10), static_cast<int>(s % 10)};
      out.diagnostics.push_back("stratum " + std::string(to_string(st.region)) + "/ADI-decile " +
                                std::to_string(st.adi_bin) + " has " + std::to_string(members.size()) +
                                " block groups (< " + std::to_string(want) + "); taking all");
    }
    Engine rng(mix_seed(seed, {s}));
    for (auto i : sample_without_replacement(members.size(), want, rng)) out.selected.push_back(*members[i]);
  }
  return out;
}

double collection_radius(std::int64_t population, double county_density) {
  if (population < 0) throw ValidationError("collection_radius: negative population");
  if (!(county_density > 0.0)) throw ValidationError("collection_radius: county density must be positive");
  const double raw = std::sqrt(static_cast<double>(population) / (std::numbers::pi * county_density));
  return std::clamp(raw, kMinRadiusMiles, kMaxRadiusMiles);
}

KeywordTable KeywordTable::bundled() { return from_json(resources::keyword_table_json); }

KeywordTable KeywordTable::from_json(std::string_view json_text) {
  KeywordTable table;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("keyword table: ") + e.what());
  }
  for (Category c : kAllCategories) {
    const auto key = std::string(to_string(c));
    if (!j.contains(key) || !j[key].is_array() || j[key].empty()) {
      throw ValidationError("keyword table: missing or empty list for " + key);
    }
    for (const auto& kw : j[key]) table.lists_[index_of(c)].push_back(kw.get<std::string>());
  }
  table.version_ = j.value("version", 0);
  return table;
}

QuerySpec build_query(const BlockGroup& bg, int year, Category category, const KeywordTable& keywords) {
  if (static_cast<unsigned>(category) > 2) throw ValidationError("build_query: unknown category");
  validate(bg);
  QuerySpec q;
  q.bg_id = bg.bg_id;
  q.year = year;
  q.category = category;
  q.keywords = keywords[category];
  q.center = bg.centroid;
  q.radius_miles = collection_radius(bg.population, bg.county_density);
  if (category == Category::General) q.max_results = kGeneralTweetCap;
  return q;
}

std::string to_json_line(const QuerySpec& spec) {
  auto fixed6 = [](double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  std::string out = "{\"bg_id\":" + nlohmann::json(spec.bg_id).dump();
  out += ",\"year\":" + std::to_string(spec.year);
  out += ",\"category\":\"" + std::string(to_string(spec.category)) + "\"";
  out += ",\"keywords\":" + nlohmann::json(spec.keywords).dump();
  out += ",\"center\":[" + fixed6(spec.center.lat) + "," + fixed6(spec.center.lon) + "]";
  out += ",\"radius_miles\":" + fixed6(spec.radius_miles);
  out += ",\"max_results\":" + (spec.max_results ? std::to_string(*spec.max_results) : std::string("null"));
  out += "}";
  return out;
}

}  // namespace localhealth::geo
