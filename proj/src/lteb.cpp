#include "localhealth/lteb.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace localhealth::lteb {

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "LTEB requires IEEE-754 float");

class Writer {
 public:
  void bytes(std::string_view b) { out_.append(b); }
  template <typename T>
  void le(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::string_view bytes(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  template <typename T>
  T le() {
    auto b = bytes(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<std::uint8_t>(b[i])) << (8 * i);
    return value;
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("LTEB: truncated file");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const File& file) {
  Writer w;
  w.bytes("LTEB");
  w.le<std::uint16_t>(kVersion);
  w.le<std::uint16_t>(file.flags);
  w.le<std::uint32_t>(file.dim);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(file.records.size()));
  for (const auto& rec : file.records) {
    if (rec.key.bg_id.size() > 0xFFFF) throw ValidationError("LTEB: bg_id too long");
    if (rec.key.year < 0 || rec.key.year > 0xFFFF) throw ValidationError("LTEB: year out of range");
    if (rec.values.size() != static_cast<std::size_t>(rec.n_tweets) * file.dim) {
      throw ValidationError("LTEB: record " + encoding::describe(rec.key) + " has wrong value count");
    }
    w.le<std::uint16_t>(static_cast<std::uint16_t>(rec.key.bg_id.size()));
    w.bytes(rec.key.bg_id);
    w.le<std::uint16_t>(static_cast<std::uint16_t>(rec.key.year));
    w.le<std::uint8_t>(static_cast<std::uint8_t>(rec.key.category));
    w.le<std::uint32_t>(rec.n_tweets);
    w.bytes({reinterpret_cast<const char*>(rec.manifest_digest.data()), rec.manifest_digest.size()});
    for (float v : rec.values) w.f32(v);
  }
  return w.take();
}

File parse(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || r.bytes(4) != "LTEB") throw FormatError("LTEB: bad magic");
  const auto version = r.le<std::uint16_t>();
  if (version != kVersion) throw FormatError("LTEB: unsupported version " + std::to_string(version));
  File file;
  file.flags = r.le<std::uint16_t>();
  if (file.flags & ~(kFlagTokenMeanPooled | kFlagCellMean)) throw FormatError("LTEB: unknown flag bits");
  file.dim = r.le<std::uint32_t>();
  if (file.dim == 0) throw FormatError("LTEB: zero dimension");
  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    Record rec;
    const auto id_len = r.le<std::uint16_t>();
    rec.key.bg_id = std::string(r.bytes(id_len));
    rec.key.year = r.le<std::uint16_t>();
    const auto cat = r.le<std::uint8_t>();
    if (cat > 2) throw FormatError("LTEB: bad category code " + std::to_string(cat));
    rec.key.category = static_cast<Category>(cat);
    rec.n_tweets = r.le<std::uint32_t>();
    auto digest = r.bytes(32);
    std::memcpy(rec.manifest_digest.data(), digest.data(), 32);
    const std::size_t n_values = static_cast<std::size_t>(rec.n_tweets) * file.dim;
    if (r.remaining() / 4 < n_values) throw FormatError("LTEB: truncated file");
    rec.values.resize(n_values);
    for (auto& v : rec.values) {
      v = r.f32();
      if (!std::isfinite(v)) throw FormatError("LTEB: non-finite value in " + encoding::describe(rec.key));
    }
    file.records.push_back(std::move(rec));
  }
  if (!r.done()) throw FormatError("LTEB: trailing bytes after last record");
  return file;
}

void write_file(const std::filesystem::path& path, const File& file) {
  const auto bytes = serialize(file);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("LTEB: cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("LTEB: write failed for '" + path.string() + "'");
}

File read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("LTEB: cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(bytes);
}

std::map<encoding::CellKey, encoding::EmbeddingMatrix> load_embeddings(
    const std::filesystem::path& path, std::span<const encoding::CellManifest> expected_manifest,
    std::optional<int> expected_dim) {
  File file = read_file(path);
  if (expected_dim && static_cast<std::uint32_t>(*expected_dim) != file.dim) {
    throw ValidationError("LTEB: file dim " + std::to_string(file.dim) + " does not match encoder dim " +
                          std::to_string(*expected_dim));
  }
  std::map<encoding::CellKey, const encoding::CellManifest*> manifest;
  for (const auto& cell : expected_manifest) manifest.emplace(cell.key, &cell);

  const bool cell_mean = (file.flags & kFlagCellMean) != 0;
  std::map<encoding::CellKey, encoding::EmbeddingMatrix> out;
  for (auto& rec : file.records) {
    auto it = manifest.find(rec.key);
    if (it == manifest.end()) throw ValidationError("LTEB: record " + encoding::describe(rec.key) + " not in manifest");
    if (rec.manifest_digest != it->second->digest()) {
      throw ValidationError("LTEB: manifest digest mismatch for " + encoding::describe(rec.key));
    }
    const std::size_t expected_rows = cell_mean ? 1 : it->second->rows.size();
    if (rec.n_tweets != expected_rows) {
      throw ValidationError("LTEB: " + encoding::describe(rec.key) + " has " + std::to_string(rec.n_tweets) +
                            " rows, manifest has " + std::to_string(it->second->rows.size()));
    }
    encoding::EmbeddingMatrix m{rec.key, rec.n_tweets, file.dim, std::move(rec.values)};
    if (!out.emplace(rec.key, std::move(m)).second) {
      throw ValidationError("LTEB: duplicate record " + encoding::describe(rec.key));
    }
  }
  if (out.size() != manifest.size()) {
    for (const auto& [key, cell] : manifest) {
      if (!out.contains(key)) throw ValidationError("LTEB: no record for manifest cell " + encoding::describe(key));
    }
  }
  return out;
}

}  // namespace localhealth::lteb
