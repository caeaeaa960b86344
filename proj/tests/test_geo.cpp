#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "localhealth/geo.hpp"
#include "support.hpp"

using namespace localhealth;
using lh_test::make_bg;

namespace {

std::vector<BlockGroup> full_universe(int per_stratum) {
  std::vector<BlockGroup> out;
  int k = 0;
  for (Region r : kAllRegions) {
    for (int d = 0; d < 10; ++d) {
      for (int i = 0; i < per_stratum; ++i) out.push_back(make_bg(lh_test::bg_name(k++), r, 10 * d + 1 + i % 10));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("stratify_and_sample") {
  SUBCASE("25 per stratum over 40 strata") {
    const auto universe = full_universe(60);
    const auto a = geo::stratify_and_sample(universe, 25, 9);
    CHECK(a.selected.size() == 1000);
    CHECK(a.diagnostics.empty());
    std::map<int, int> per;
    std::set<std::string> ids;
    for (const auto& bg : a.selected) {
      per[stratum_index(stratum_of(bg))]++;
      ids.insert(bg.bg_id);
    }
    CHECK(per.size() == 40);
    for (const auto& [k, n] : per) CHECK(n == 25);
    CHECK(ids.size() == 1000);
    const auto b = geo::stratify_and_sample(universe, 25, 9);
    for (std::size_t i = 0; i < a.selected.size(); ++i) CHECK(a.selected[i].bg_id == b.selected[i].bg_id);
  }
  SUBCASE("small strata are taken whole") {
    auto universe = full_universe(25);
    universe.resize(universe.size() - 5);  // last stratum keeps 20
    for (std::uint64_t seed : {0u, 1u, 2u}) {
      const auto r = geo::stratify_and_sample(universe, 25, seed);
      CHECK(r.selected.size() == 995);
      CHECK(r.diagnostics.size() == 1);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(geo::stratify_and_sample({}, 25, 0), ValidationError);
    CHECK_THROWS_AS(geo::stratify_and_sample(full_universe(2), 0, 0), ValidationError);
  }
}

TEST_CASE("stratify_and_sample: inclusion frequencies match the hypergeometric marginal") {
  // One 100-member stratum, 25 drawn: each member's inclusion is Bernoulli(1/4).
  std::vector<BlockGroup> universe;
  for (int i = 0; i < 100; ++i) universe.push_back(make_bg(lh_test::bg_name(i), Region::South, 55));
  std::map<std::string, int> hits;
  const int trials = 10000;
  for (int s = 0; s < trials; ++s) {
    for (const auto& bg : geo::stratify_and_sample(universe, 25, static_cast<std::uint64_t>(s)).selected) {
      hits[bg.bg_id]++;
    }
  }
  const double p = 25.0 / 100.0;
  const double sigma = std::sqrt(p * (1 - p) / trials);
  int outside = 0;
  for (const auto& bg : universe) {
    const double f = static_cast<double>(hits[bg.bg_id]) / trials;
    if (std::abs(f - p) > 3 * sigma) ++outside;
  }
  CHECK(hits.size() == 100);
  CHECK(outside == 0);
}

TEST_CASE("collection_radius") {
  CHECK(geo::collection_radius(1257, 100.0) == doctest::Approx(std::sqrt(1257 / (std::numbers::pi * 100))).epsilon(1e-15));
  CHECK(std::abs(geo::collection_radius(1257, 100.0) - 2.0002) < 1e-4);
  CHECK(geo::collection_radius(1257, 100.0) > 2.0);
  CHECK(geo::collection_radius(0, 50.0) == 2.0);
  CHECK(geo::collection_radius(10'000'000, 1.0) == 10.0);
  CHECK_THROWS_AS(geo::collection_radius(100, 0.0), ValidationError);
  CHECK_THROWS_AS(geo::collection_radius(100, -3.0), ValidationError);
  // Monotone in population, antitone in density.
  double prev = 0;
  for (std::int64_t pop = 0; pop <= 200000; pop += 5000) {
    const double r = geo::collection_radius(pop, 300.0);
    CHECK(r >= prev);
    prev = r;
  }
  prev = 11;
  for (double rho = 1; rho < 1e5; rho *= 1.7) {
    const double r = geo::collection_radius(30000, rho);
    CHECK(r <= prev);
    prev = r;
  }
}

TEST_CASE("build_query") {
  const auto kw = geo::KeywordTable::bundled();
  CHECK(kw[Category::MH].size() == 66);  // as transcribed from the keyword table
  CHECK(kw[Category::FI].size() == 19);
  const auto bg = make_bg("BG1", Region::West, 42, 2400, 80.0);
  const auto general = geo::build_query(bg, 2017, Category::General, kw);
  CHECK(general.keywords == std::vector<std::string>{" "});
  CHECK(general.max_results == 1000);
  const auto fi = geo::build_query(bg, 2017, Category::FI, kw);
  CHECK(fi.keywords.size() == 19);
  CHECK(std::count(fi.keywords.begin(), fi.keywords.end(), "food stamps") == 1);
  CHECK(std::count(fi.keywords.begin(), fi.keywords.end(), "no groceries") == 1);
  CHECK_FALSE(fi.max_results.has_value());
  CHECK(fi.radius_miles == general.radius_miles);
  CHECK(fi.center.lat == general.center.lat);
  CHECK(fi.keywords != general.keywords);
  CHECK(fi.radius_miles == geo::collection_radius(2400, 80.0));
  CHECK_THROWS_AS(geo::build_query(bg, 2017, static_cast<Category>(7), kw), ValidationError);

  const auto j = nlohmann::json::parse(geo::to_json_line(general));
  CHECK(j["bg_id"] == "BG1");
  CHECK(j["max_results"] == 1000);
  const auto line = geo::to_json_line(fi);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(nlohmann::json::parse(line).contains("radius_miles"));
}

TEST_CASE("keyword table file") {
  CHECK_THROWS_AS(geo::KeywordTable::from_json(R"({"MH":["a"],"FI":[]})"), ValidationError);
  CHECK_THROWS_AS(geo::KeywordTable::from_json("not json"), ValidationError);
  const auto t = geo::KeywordTable::from_json(R"({"MH":["sad"],"FI":["broke"],"General":[" "]})");
  CHECK(t[Category::FI] == std::vector<std::string>{"broke"});
}

TEST_CASE("ADI deciles") {
  CHECK(adi_decile(1) == 0);
  CHECK(adi_decile(10) == 0);
  CHECK(adi_decile(11) == 1);
  CHECK(adi_decile(100) == 9);
  CHECK_THROWS_AS(adi_decile(0), ValidationError);
  CHECK_THROWS_AS(adi_decile(101), ValidationError);
}
