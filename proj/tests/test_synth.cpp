#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "localhealth/io.hpp"
#include "localhealth/synth.hpp"

using namespace localhealth;

namespace {

double corr(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

synth::SignalConfig small_config(int n_bgs) {
  auto cfg = synth::SignalConfig::defaults();
  cfg.n_bgs = n_bgs;
  cfg.tweets_min = 20;
  cfg.tweets_max = 60;
  cfg.sparse_bg_fraction = 0.0;
  cfg.missing_outcome_fraction = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("generate_universe") {
  auto cfg = small_config(40);
  Diagnostics diag;
  const auto u = synth::generate_universe(cfg, 3, &diag);
  CHECK(diag.empty());
  REQUIRE(u.size() == 40);
  std::set<int> strata;
  for (const auto& bg : u) {
    strata.insert(stratum_index(stratum_of(bg)));
    CHECK(bg.population >= 600);
    CHECK(bg.population <= 3000);
    CHECK(bg.county_density >= 5.0);
    CHECK(bg.county_density <= 20000.0);
    CHECK_NOTHROW(validate(bg));
  }
  CHECK(strata.size() == 40);

  cfg.n_bgs = 12;
  diag.clear();
  CHECK(synth::generate_universe(cfg, 3, &diag).size() == 12);
  CHECK(diag.size() == 1);
  cfg.n_bgs = 0;
  CHECK_THROWS_AS(synth::generate_universe(cfg, 3), ValidationError);
}

TEST_CASE("generate_universe: ADI histogram is uniform") {
  // Over 10,000 block groups each ADI value has multinomial probability 1/100.
  auto cfg = small_config(10000);
  const auto u = synth::generate_universe(cfg, 17);
  std::map<int, int> hist;
  for (const auto& bg : u) hist[bg.adi]++;
  CHECK(hist.size() == 100);
  const double n = 10000, p = 0.01;
  const double sigma = std::sqrt(n * p * (1 - p));
  double chi2 = 0;
  for (int a = 1; a <= 100; ++a) {
    CHECK(std::abs(hist[a] - n * p) <= 3 * sigma);
    chi2 += (hist[a] - n * p) * (hist[a] - n * p) / (n * p);
  }
  CHECK(chi2 < 148.2);  // chi-square 99 df, upper 0.1%
  std::map<int, int> deciles;
  for (const auto& bg : u) deciles[adi_decile(bg.adi)]++;
  for (const auto& [d, k] : deciles) CHECK(k == 1000);
}

TEST_CASE("generate_corpus: degenerate signals") {
  SUBCASE("ADI only") {
    auto cfg = small_config(80);
    cfg.beta_text = 0;
    cfg.noise_sigma = 0;
    const auto u = synth::generate_universe(cfg, 1);
    const auto c = synth::generate_corpus(u, cfg, 1);
    std::vector<double> g, adi;
    for (const auto& bg : u) {
      for (int y : cfg.years) {
        g.push_back(c.outcomes.at({bg.bg_id, y}));
        adi.push_back(bg.adi);
      }
    }
    CHECK(corr(g, adi) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("text only, noiseless") {
    auto cfg = small_config(60);
    cfg.beta_adi = 0;
    cfg.noise_sigma = 0;
    const auto u = synth::generate_universe(cfg, 2);
    const auto c = synth::generate_corpus(u, cfg, 2);
    double max_resid = 0;
    for (const auto& l : c.latent) {
      const double g = c.outcomes.at({l.bg_id, l.year});
      max_resid = std::max(max_resid, std::abs(g - (cfg.base + cfg.beta_text * l.pi)));
    }
    CHECK(max_resid < 1e-15);
  }
}

TEST_CASE("generate_corpus: planted signal is visible in token rates") {
  auto cfg = small_config(100);
  cfg.tweets_min = 200;
  cfg.tweets_max = 400;
  const auto u = synth::generate_universe(cfg, 5);
  const auto c = synth::generate_corpus(u, cfg, 5);
  REQUIRE(c.latent.size() == 500);
  std::vector<double> g, rate;
  for (const auto& l : c.latent) {
    g.push_back(c.outcomes.at({l.bg_id, l.year}));
    rate.push_back(l.distress_token_rate);
  }
  CHECK(corr(g, rate) > 0.9);
}

TEST_CASE("generate_corpus: counts are a recount of the stream") {
  auto cfg = small_config(40);
  cfg.general_cap = 25;  // below tweets_max so the cap binds
  const auto u = synth::generate_universe(cfg, 8);
  const auto c = synth::generate_corpus(u, cfg, 8);
  std::map<std::tuple<std::string, int, Category>, std::int64_t> recount;
  for (const auto& t : c.tweets) recount[{t.bg_id, t.year, t.category}]++;
  const auto kw = geo::KeywordTable::bundled();
  for (const auto& l : c.latent) {
    CHECK(c.counts.at({l.bg_id, l.year, Category::MH}) == recount[{l.bg_id, l.year, Category::MH}]);
    CHECK(c.counts.at({l.bg_id, l.year, Category::FI}) == recount[{l.bg_id, l.year, Category::FI}]);
    CHECK(c.counts.at({l.bg_id, l.year, Category::General}) == l.stream_size);
    CHECK(recount[{l.bg_id, l.year, Category::General}] == std::min<std::int64_t>(l.stream_size, 25));
  }
  for (const auto& t : c.tweets) {
    if (t.category == Category::General) continue;
    bool hit = false;
    for (const auto& k : kw[t.category]) hit = hit || synth::contains_keyword(t.text, k);
    CHECK(hit);
  }
}

TEST_CASE("generate_corpus is byte-identical under a fixed seed") {
  auto cfg = small_config(40);
  auto serialize = [&](std::uint64_t seed) {
    const auto u = synth::generate_universe(cfg, seed);
    const auto c = synth::generate_corpus(u, cfg, seed);
    std::ostringstream out;
    io::write_block_groups(out, u);
    io::write_tweets(out, c.tweets);
    io::write_outcomes(out, c.outcomes);
    io::write_counts(out, c.counts);
    return out.str();
  };
  CHECK(serialize(4) == serialize(4));
  CHECK(serialize(4) != serialize(5));
}

TEST_CASE("SignalConfig validation") {
  auto cfg = synth::SignalConfig::defaults();
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.distress_pool.clear();
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.neutral_pool.push_back(cfg.distress_pool.front());
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.beta_text = -0.1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.noise_sigma = -1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("contains_keyword matches whole tokens") {
  CHECK(synth::contains_keyword("I feel so depressed today", "depressed"));
  CHECK(synth::contains_keyword("No Groceries left", "no groceries"));
  CHECK_FALSE(synth::contains_keyword("undepressed", "depressed"));
  CHECK_FALSE(synth::contains_keyword("no more groceries", "no groceries"));
}
