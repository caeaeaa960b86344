// LTEB: binary interchange format for per-tweet embeddings.
//
// All integers little-endian.
//   "LTEB" | version u16 (=1) | flags u16 | dim u32 | record count u32
//   per record:
//     bg_id length u16 | bg_id UTF-8 bytes | year u16 | category u8 (0 MH, 1 FI, 2 General)
//     n_tweets u32 | manifest digest (32 bytes, SHA-256 of the cell's manifest lines)
//     n_tweets * dim IEEE-754 float32, row-major
//
// Flag bit 0: rows are token-mean-pooled encoder states.
// Flag bit 1: each record holds a single already-aggregated cell mean.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>

#include "localhealth/encoding.hpp"

namespace localhealth::lteb {

inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint16_t kFlagTokenMeanPooled = 1u << 0;
inline constexpr std::uint16_t kFlagCellMean = 1u << 1;

class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct Record {
  encoding::CellKey key;
  Digest manifest_digest{};
  std::uint32_t n_tweets = 0;
  std::vector<float> values;  // n_tweets * dim
};

struct File {
  std::uint16_t flags = 0;
  std::uint32_t dim = 0;
  std::vector<Record> records;
};

std::string serialize(const File& file);
File parse(std::string_view bytes);

void write_file(const std::filesystem::path& path, const File& file);
File read_file(const std::filesystem::path& path);

/// Reads an LTEB file and checks it against the manifest it was exported
/// from: every manifest cell must have a record with the same key, digest
/// and row count, and no record may be left over. With `expected_dim`, the
/// file's dim must match. Values must be finite.
std::map<encoding::CellKey, encoding::EmbeddingMatrix> load_embeddings(
    const std::filesystem::path& path, std::span<const encoding::CellManifest> expected_manifest,
    std::optional<int> expected_dim = std::nullopt);

}  // namespace localhealth::lteb
