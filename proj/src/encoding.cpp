#include "localhealth/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>

#include <nlohmann/json.hpp>

namespace localhealth::encoding {

namespace {

bool is_power_of_two(int x) { return x > 0 && (x & (x - 1)) == 0; }

std::string manifest_line(const CellKey& key, const ManifestRow& row) {
  nlohmann::ordered_json j;
  j["bg_id"] = key.bg_id;
  j["year"] = key.year;
  j["category"] = to_string(key.category);
  j["tweet_id"] = row.tweet_id;
  j["text"] = row.text;
  return j.dump();
}

}  // namespace

EncoderSpec EncoderSpec::hashing(int dim, int seq_len) {
  EncoderSpec s;
  s.kind = EncoderKind::Hashing;
  s.dim = dim;
  s.seq_len = seq_len;
  s.identifier = "hashing-" + std::to_string(dim);
  s.validate();
  return s;
}

EncoderSpec EncoderSpec::external(std::filesystem::path embeddings, std::filesystem::path manifest, int dim,
                                  std::string identifier) {
  EncoderSpec s;
  s.kind = EncoderKind::ExternalFile;
  s.dim = dim;
  s.identifier = std::move(identifier);
  s.embeddings = std::move(embeddings);
  s.manifest = std::move(manifest);
  s.validate();
  return s;
}

void EncoderSpec::validate() const {
  if (dim < 16) throw ValidationError("encoder: dim must be >= 16 (conv kernel width)");
  if (!is_power_of_two(seq_len)) throw ValidationError("encoder: seq_len must be a power of two");
  if (kind == EncoderKind::Hashing) {
    const bool listed = dim == 256 || dim == 768 || dim == 1024 || dim == 1536;
    if (!listed && !is_power_of_two(dim)) {
      throw ValidationError("hashing encoder: dim " + std::to_string(dim) + " is neither a power of two nor one of 256/768/1024/1536");
    }
  } else if (embeddings.empty()) {
    throw ValidationError("external encoder '" + identifier + "': no embedding file given");
  }
}

std::string describe(const CellKey& key) {
  return "(" + key.bg_id + ", " + std::to_string(key.year) + ", " + std::string(to_string(key.category)) + ")";
}

std::string CellManifest::jsonl() const {
  std::string out;
  for (const auto& row : rows) {
    out += manifest_line(key, row);
    out += '\n';
  }
  return out;
}

TweetSample sample_tweets(std::span<const TweetRecord> cell, std::uint64_t seed, std::size_t cap) {
  if (cell.empty()) throw ValidationError("sample_tweets: empty cell");
  const CellKey key{cell.front().bg_id, cell.front().year, cell.front().category};
  for (const auto& t : cell) {
    if (t.bg_id != key.bg_id || t.year != key.year || t.category != key.category) {
      throw ValidationError("sample_tweets: cell mixes keys " + describe(key) + " and " +
                            describe({t.bg_id, t.year, t.category}));
    }
  }
  Engine rng(mix_seed(seed, {fnv1a64(key.bg_id), static_cast<std::uint64_t>(key.year),
                             static_cast<std::uint64_t>(key.category)}));
  TweetSample out;
  out.indices = sample_without_replacement(cell.size(), cap, rng);
  out.manifest.key = key;
  out.manifest.rows.reserve(out.indices.size());
  for (auto i : out.indices) out.manifest.rows.push_back({cell[i].tweet_id, cell[i].text});
  return out;
}

void write_manifest(std::ostream& out, std::span<const CellManifest> cells) {
  std::string body;
  for (const auto& cell : cells) body += cell.jsonl();
  out << body;
  nlohmann::ordered_json tail;
  tail["sha256"] = to_hex(sha256(body));
  out << tail.dump() << '\n';
}

std::vector<CellManifest> read_manifest(std::istream& in) {
  std::string line, body;
  std::vector<CellManifest> cells;
  std::optional<std::string> trailer;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (trailer) throw ValidationError("manifest: content after digest line");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("sha256")) {
      trailer = j["sha256"].get<std::string>();
      continue;
    }
    try {
      CellKey key{j.at("bg_id").get<std::string>(), j.at("year").get<int>(),
                  parse_category(j.at("category").get<std::string>())};
      if (cells.empty() || cells.back().key != key) cells.push_back({key, {}});
      cells.back().rows.push_back({j.at("tweet_id").get<std::string>(), j.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    body += line;
    body += '\n';
  }
  if (!trailer) throw ValidationError("manifest: missing trailing digest line");
  if (to_hex(sha256(body)) != *trailer) throw ValidationError("manifest: digest mismatch");
  return cells;
}

std::vector<double> hash_encode(std::string_view text, const EncoderSpec& spec) {
  if (spec.kind != EncoderKind::Hashing) throw ValidationError("hash_encode: encoder is not a hashing encoder");
  auto tokens = split_whitespace(text);
  if (tokens.empty()) throw ValidationError("hash_encode: text has no tokens");
  if (tokens.size() > static_cast<std::size_t>(spec.seq_len)) tokens.resize(static_cast<std::size_t>(spec.seq_len));

  std::vector<double> v(static_cast<std::size_t>(spec.dim), 0.0);
  const auto dim = static_cast<std::uint64_t>(spec.dim);
  for (auto token : tokens) {
    const std::uint64_t h = fnv1a64(to_lower_ascii(token));
    v[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  // Every token can cancel against a colliding opposite-sign token.
  if (norm == 0.0) return v;
  for (double& x : v) x /= norm;
  return v;
}

EmbeddingMatrix encode_cell(const CellManifest& manifest, const EncoderSpec& spec) {
  EmbeddingMatrix m;
  m.key = manifest.key;
  m.rows = manifest.rows.size();
  m.dim = static_cast<std::size_t>(spec.dim);
  m.values.reserve(m.rows * m.dim);
  for (const auto& row : manifest.rows) {
    for (double x : hash_encode(row.text, spec)) m.values.push_back(static_cast<float>(x));
  }
  return m;
}

AggregatedVector aggregate(const EmbeddingMatrix& matrix) {
  if (matrix.rows == 0) throw ValidationError("aggregate: empty embedding matrix " + describe(matrix.key));
  if (matrix.values.size() != matrix.rows * matrix.dim) throw ValidationError("aggregate: malformed matrix");
  AggregatedVector out{matrix.key, std::vector<double>(matrix.dim, 0.0)};
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    auto row = matrix.row(i);
    for (std::size_t d = 0; d < matrix.dim; ++d) out.v_bar[d] += row[d];
  }
  const double inv = 1.0 / static_cast<double>(matrix.rows);
  for (double& x : out.v_bar) x *= inv;
  return out;
}

AggregatedVector combine_categories(const AggregatedVector& v_mh, const AggregatedVector& v_fi) {
  if (v_mh.v_bar.size() != v_fi.v_bar.size()) throw ValidationError("combine_categories: dimension mismatch");
  if (v_mh.key.bg_id != v_fi.key.bg_id || v_mh.key.year != v_fi.key.year) {
    throw ValidationError("combine_categories: vectors belong to different cells");
  }
  AggregatedVector out = v_mh;
  for (std::size_t i = 0; i < out.v_bar.size(); ++i) out.v_bar[i] += v_fi.v_bar[i];
  return out;
}

}  // namespace localhealth::encoding
