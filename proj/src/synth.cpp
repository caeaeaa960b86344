#include "localhealth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace localhealth::synth {

SignalConfig SignalConfig::defaults() {
  SignalConfig c;
  // A handful of distress tokens are also MH/FI collection keywords; the
  // neutral pool holds everyday words, some of which are MH keywords too.
  c.distress_pool = {"depressed", "insomnia", "hungry",   "hunger",    "hopeless", "crying",  "lonely",
                     "anxious",   "empty",    "broke",    "evicted",   "starving", "numb",    "stressed",
                     "drained",   "panic",    "sad",      "hurting",   "miserable", "overwhelmed"};
  c.neutral_pool = {"game",  "coffee", "weekend", "music",  "friends", "traffic", "weather", "pizza",
                    "movie", "beach",  "work",    "school", "party",   "dog",     "church",  "sunset",
                    "happy", "love",   "lol",     "today",  "tonight", "team",    "quiet",   "thoughts",
                    "awake", "tired",  "bored",   "snap",   "city",    "family",  "birthday", "chicken",
                    "bus",   "rain",   "summer",  "win",    "finally", "morning", "lunch",   "shopping"};
  return c;
}

void SignalConfig::validate() const {
  if (n_bgs <= 0) throw ValidationError("synth: n_bgs must be positive");
  if (years.empty()) throw ValidationError("synth: no years");
  if (distress_pool.empty() || neutral_pool.empty()) throw ValidationError("synth: empty vocabulary pool");
  std::set<std::string> distress(distress_pool.begin(), distress_pool.end());
  for (const auto& t : neutral_pool) {
    if (distress.contains(t)) throw ValidationError("synth: token '" + t + "' is in both pools");
  }
  for (const auto* pool : {&distress_pool, &neutral_pool}) {
    for (const auto& t : *pool) {
      if (t.empty() || split_whitespace(t).size() != 1) throw ValidationError("synth: pool tokens must be single words");
    }
  }
  if (beta_text < 0 || beta_adi < 0) throw ValidationError("synth: signal weights must be non-negative");
  if (noise_sigma < 0) throw ValidationError("synth: noise_sigma must be non-negative");
  if (!(distress_alpha > 0 && distress_beta > 0)) throw ValidationError("synth: Beta parameters must be positive");
  if (tweets_min < 1 || tweets_max < tweets_min) throw ValidationError("synth: bad tweets_per_cell range");
  if (words_min < 1 || words_max < words_min) throw ValidationError("synth: bad words-per-tweet range");
  if (sparse_bg_fraction < 0 || sparse_bg_fraction > 1) throw ValidationError("synth: sparse_bg_fraction outside [0,1]");
  if (sparse_tweets_max < 1) throw ValidationError("synth: sparse_tweets_max must be >= 1");
  if (missing_outcome_fraction < 0 || missing_outcome_fraction > 1) {
    throw ValidationError("synth: missing_outcome_fraction outside [0,1]");
  }
  if (general_cap < 1) throw ValidationError("synth: general_cap must be >= 1");
}

std::vector<BlockGroup> generate_universe(const SignalConfig& config, std::uint64_t seed, Diagnostics* diagnostics) {
  if (config.n_bgs <= 0) throw ValidationError("generate_universe: n_bgs must be positive");
  if (config.n_bgs < kNumStrata && diagnostics) {
    diagnostics->push_back("universe of " + std::to_string(config.n_bgs) + " block groups cannot cover all 40 strata");
  }
  std::vector<BlockGroup> out;
  out.reserve(static_cast<std::size_t>(config.n_bgs));
  Engine rng(mix_seed(seed, {0x0B6}));
  for (int i = 0; i < config.n_bgs; ++i) {
    BlockGroup bg;
    char id[24];
    std::snprintf(id, sizeof id, "BG%06d", i);
    bg.bg_id = id;
    bg.region = kAllRegions[static_cast<std::size_t>(i % 4)];
    const int decile = (i / 4) % 10;
    bg.adi = static_cast<int>(uniform_int(rng, 10 * decile + 1, 10 * decile + 10));
    bg.population = uniform_int(rng, 600, 3000);
    bg.county_density = std::exp(uniform_real(rng, std::log(5.0), std::log(20000.0)));
    bg.centroid = {uniform_real(rng, 25.0, 49.0), uniform_real(rng, -124.0, -67.0)};
    out.push_back(std::move(bg));
  }
  return out;
}

bool contains_keyword(std::string_view text, std::string_view keyword) {
  const auto kw_tokens = split_whitespace(keyword);
  if (kw_tokens.empty()) return true;
  const auto tokens = split_whitespace(text);
  if (tokens.size() < kw_tokens.size()) return false;
  for (std::size_t i = 0; i + kw_tokens.size() <= tokens.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < kw_tokens.size() && match; ++k) {
      match = to_lower_ascii(tokens[i + k]) == to_lower_ascii(kw_tokens[k]);
    }
    if (match) return true;
  }
  return false;
}

namespace {

bool matches_any(std::string_view text, const std::vector<std::string>& keywords) {
  return std::any_of(keywords.begin(), keywords.end(), [&](const auto& kw) { return contains_keyword(text, kw); });
}

}  // namespace

SyntheticCorpus generate_corpus(std::span<const BlockGroup> universe, const SignalConfig& config, std::uint64_t seed,
                                const geo::KeywordTable& keywords) {
  config.validate();
  SyntheticCorpus corpus;

  std::vector<const BlockGroup*> ordered;
  for (const auto& bg : universe) ordered.push_back(&bg);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->bg_id < b->bg_id; });

  for (const BlockGroup* bg : ordered) {
    const std::uint64_t bg_hash = fnv1a64(bg->bg_id);
    Engine bg_rng(mix_seed(seed, {bg_hash, 0xB6}));
    const bool sparse = uniform_real(bg_rng, 0.0, 1.0) < config.sparse_bg_fraction;
    std::optional<int> missing_year;
    if (uniform_real(bg_rng, 0.0, 1.0) < config.missing_outcome_fraction) {
      missing_year = config.years[static_cast<std::size_t>(
          uniform_int(bg_rng, 0, static_cast<std::int64_t>(config.years.size()) - 1))];
    }

    for (int year : config.years) {
      Engine rng(mix_seed(seed, {bg_hash, static_cast<std::uint64_t>(year)}));
      LatentCell latent;
      latent.bg_id = bg->bg_id;
      latent.year = year;
      latent.pi = beta(rng, config.distress_alpha, config.distress_beta);
      latent.stream_size = sparse ? uniform_int(rng, 1, config.sparse_tweets_max)
                                  : uniform_int(rng, config.tweets_min, config.tweets_max);

      std::vector<std::string> stream;
      stream.reserve(static_cast<std::size_t>(latent.stream_size));
      for (std::int64_t t = 0; t < latent.stream_size; ++t) {
        const auto words = uniform_int(rng, config.words_min, config.words_max);
        std::string text;
        for (std::int64_t w = 0; w < words; ++w) {
          const bool distress = uniform_real(rng, 0.0, 1.0) < latent.pi;
          const auto& pool = distress ? config.distress_pool : config.neutral_pool;
          const auto& token = pool[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(pool.size()) - 1))];
          if (!text.empty()) text += ' ';
          text += token;
          latent.distress_tokens += distress ? 1 : 0;
        }
        latent.total_tokens += words;
        stream.push_back(std::move(text));
      }
      latent.distress_token_rate =
          static_cast<double>(latent.distress_tokens) / static_cast<double>(std::max<std::int64_t>(1, latent.total_tokens));

      auto make_id = [&](std::size_t idx, Category c) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s-%d-%06zu-%s", bg->bg_id.c_str(), year, idx, std::string(to_string(c)).c_str());
        return std::string(buf);
      };
      std::int64_t mh = 0, fi = 0;
      for (std::size_t i = 0; i < stream.size(); ++i) {
        if (matches_any(stream[i], keywords[Category::MH])) {
          ++mh;
          corpus.tweets.push_back({make_id(i, Category::MH), stream[i], bg->bg_id, year, Category::MH});
        }
        if (matches_any(stream[i], keywords[Category::FI])) {
          ++fi;
          corpus.tweets.push_back({make_id(i, Category::FI), stream[i], bg->bg_id, year, Category::FI});
        }
      }
      auto general = sample_without_replacement(stream.size(), static_cast<std::size_t>(config.general_cap), rng);
      std::sort(general.begin(), general.end());
      for (auto i : general) {
        corpus.tweets.push_back({make_id(i, Category::General), stream[i], bg->bg_id, year, Category::General});
      }
      corpus.counts[{bg->bg_id, year, Category::MH}] = mh;
      corpus.counts[{bg->bg_id, year, Category::FI}] = fi;
      corpus.counts[{bg->bg_id, year, Category::General}] = latent.stream_size;

      const double noise = normal(rng, 0.0, config.noise_sigma);
      const double g = config.base + config.beta_text * latent.pi + config.beta_adi * (bg->adi / 100.0) + noise;
      if (missing_year != year) corpus.outcomes[{bg->bg_id, year}] = std::clamp(g, 0.0, 1.0);
      corpus.latent.push_back(std::move(latent));
    }
  }
  return corpus;
}

}  // namespace localhealth::synth
