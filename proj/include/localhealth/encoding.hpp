// Tweet sampling, per-tweet encoding and aggregation into one vector per
// (block group, year, category) cell.
#pragma once

#include <filesystem>
#include <iosfwd>

#include "localhealth/common.hpp"
#include "localhealth/sha256.hpp"

namespace localhealth::encoding {

inline constexpr std::size_t kMaxTweetsPerCell = 4000;

enum class EncoderKind { Hashing, ExternalFile };

struct EncoderSpec {
  EncoderKind kind = EncoderKind::Hashing;
  int dim = 256;
  int seq_len = 64;
  std::string identifier = "hashing-256";
  std::filesystem::path embeddings;  // LTEB file, ExternalFile only
  std::filesystem::path manifest;    // sample manifest the file was exported from

  static EncoderSpec hashing(int dim = 256, int seq_len = 64);
  static EncoderSpec external(std::filesystem::path embeddings, std::filesystem::path manifest, int dim,
                              std::string identifier);
  void validate() const;
};

struct CellKey {
  std::string bg_id;
  int year = 0;
  Category category = Category::General;

  auto operator<=>(const CellKey&) const = default;
};

std::string describe(const CellKey& key);

struct ManifestRow {
  std::string tweet_id;
  std::string text;
};

struct CellManifest {
  CellKey key;
  std::vector<ManifestRow> rows;  // sampled order

  /// The cell's JSON lines, each newline-terminated, exactly as written to a manifest file.
  std::string jsonl() const;
  Digest digest() const { return sha256(jsonl()); }
};

struct TweetSample {
  std::vector<std::size_t> indices;  // into the input cell, sampled order
  CellManifest manifest;
};

/// Uniform sample without replacement of min(cap, n) tweets. The stream is
/// seeded from (seed, bg_id, year, category) of the cell.
TweetSample sample_tweets(std::span<const TweetRecord> cell, std::uint64_t seed,
                          std::size_t cap = kMaxTweetsPerCell);

/// JSON lines per sampled tweet followed by {"sha256": hex of all prior bytes}.
void write_manifest(std::ostream& out, std::span<const CellManifest> cells);
/// Verifies the trailing digest; groups consecutive rows by cell key.
std::vector<CellManifest> read_manifest(std::istream& in);

/// Signed feature hashing of the first seq_len lowercased whitespace tokens
/// (FNV-1a 64: bucket = h mod dim, sign = top bit), L2-normalised. Order of
/// tokens does not matter. Throws on text with no tokens.
std::vector<double> hash_encode(std::string_view text, const EncoderSpec& spec);

struct EmbeddingMatrix {
  CellKey key;
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> values;  // row-major, rows x dim

  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

struct AggregatedVector {
  CellKey key;
  std::vector<double> v_bar;
};

/// Hashing encoder over every manifest row.
EmbeddingMatrix encode_cell(const CellManifest& manifest, const EncoderSpec& spec);

/// Row mean.
AggregatedVector aggregate(const EmbeddingMatrix& matrix);

/// Elementwise sum of the MH and FI vectors of one (bg, year). The result
/// keeps the MH key.
AggregatedVector combine_categories(const AggregatedVector& v_mh, const AggregatedVector& v_fi);

}  // namespace localhealth::encoding
