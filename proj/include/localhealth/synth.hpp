// Synthetic block-group universes and tweet corpora with a planted linear
// relationship between distress-token usage, ADI and the outcome.
#pragma once

#include "localhealth/dataset.hpp"
#include "localhealth/geo.hpp"

namespace localhealth::synth {

struct SignalConfig {
  int n_bgs = 200;
  std::vector<int> years = default_years();
  std::vector<std::string> distress_pool;
  std::vector<std::string> neutral_pool;

  // g = clip(base + beta_text * pi + beta_adi * ADI/100 + N(0, noise_sigma), 0, 1)
  double base = 0.08;
  double beta_text = 0.15;
  double beta_adi = 0.05;
  double noise_sigma = 0.01;
  double distress_alpha = 1.0;  // pi ~ Beta(alpha, beta)
  double distress_beta = 1.0;

  int tweets_min = 200;  // pre-cap stream size per (bg, year)
  int tweets_max = 1200;
  int words_min = 6;
  int words_max = 20;
  double sparse_bg_fraction = 0.1;  // low-activity block groups, likely removed by cleaning
  int sparse_tweets_max = 6;
  double missing_outcome_fraction = 0.02;  // block groups with one year absent from the outcome table
  int general_cap = geo::kGeneralTweetCap;

  /// Default pools and the parameters above.
  static SignalConfig defaults();
  void validate() const;
};

/// ADI deciles cycle every four block groups and regions cycle round-robin,
/// so any multiple of 40 covers every stratum equally; the ADI value within a
/// decile is uniform. Populations are uniform on [600, 3000], county
/// densities log-uniform on [5, 20000] persons per square mile.
std::vector<BlockGroup> generate_universe(const SignalConfig& config, std::uint64_t seed,
                                          Diagnostics* diagnostics = nullptr);

struct LatentCell {
  std::string bg_id;
  int year = 0;
  double pi = 0.0;                   // latent distress rate
  double distress_token_rate = 0.0;  // realized share of distress tokens in the stream
  std::int64_t stream_size = 0;
  std::int64_t distress_tokens = 0;
  std::int64_t total_tokens = 0;
};

struct SyntheticCorpus {
  std::vector<TweetRecord> tweets;
  OutcomeTable outcomes;
  CountTable counts;
  std::vector<LatentCell> latent;  // ordered by (bg_id, year)
};

/// MH and FI records are the stream tweets matching that category's
/// keywords; General is a uniform subsample of the whole stream capped at
/// `general_cap`. Counts are taken over the uncapped stream.
SyntheticCorpus generate_corpus(std::span<const BlockGroup> universe, const SignalConfig& config, std::uint64_t seed,
                                const geo::KeywordTable& keywords = geo::KeywordTable::bundled());

/// Case-insensitive whole-token phrase match of `keyword` inside `text`.
bool contains_keyword(std::string_view text, std::string_view keyword);

}  // namespace localhealth::synth
