#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <optional>

#include "localhealth/encoding.hpp"
#include "localhealth/geo.hpp"
#include "localhealth/head.hpp"
#include "localhealth/lteb.hpp"
#include "localhealth/metrics.hpp"
#include "localhealth/stats.hpp"
#include "localhealth/zeroshot.hpp"

namespace py = pybind11;
using namespace localhealth;

namespace {

py::dict key_dict(const encoding::CellKey& k) {
  py::dict d;
  d["bg_id"] = k.bg_id;
  d["year"] = k.year;
  d["category"] = std::string(to_string(k.category));
  return d;
}

encoding::CellKey key_from(const py::dict& d) {
  return {d["bg_id"].cast<std::string>(), d["year"].cast<int>(), parse_category(d["category"].cast<std::string>())};
}

std::vector<encoding::CellManifest> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  return encoding::read_manifest(in);
}

py::list manifest_to_py(const std::vector<encoding::CellManifest>& cells) {
  py::list out;
  for (const auto& c : cells) {
    auto d = key_dict(c.key);
    py::list rows;
    for (const auto& r : c.rows) rows.append(py::make_tuple(r.tweet_id, r.text));
    d["rows"] = rows;
    d["digest"] = to_hex(c.digest());
    out.append(d);
  }
  return out;
}

py::dict lteb_to_py(const lteb::File& f) {
  py::dict d;
  d["flags"] = f.flags;
  d["dim"] = f.dim;
  py::list records;
  for (const auto& r : f.records) {
    auto rd = key_dict(r.key);
    rd["manifest_digest"] = to_hex(r.manifest_digest);
    std::vector<std::vector<float>> rows(r.n_tweets);
    for (std::uint32_t i = 0; i < r.n_tweets; ++i) {
      rows[i].assign(r.values.begin() + static_cast<std::ptrdiff_t>(i) * f.dim,
                     r.values.begin() + static_cast<std::ptrdiff_t>(i + 1) * f.dim);
    }
    rd["rows"] = rows;
    records.append(rd);
  }
  d["records"] = records;
  return d;
}

lteb::File lteb_from_py(std::uint32_t dim, const py::list& records, std::uint16_t flags) {
  lteb::File f;
  f.flags = flags;
  f.dim = dim;
  for (const auto& item : records) {
    const auto d = item.cast<py::dict>();
    lteb::Record r;
    r.key = key_from(d);
    r.manifest_digest = digest_from_hex(d["manifest_digest"].cast<std::string>());
    const auto rows = d["rows"].cast<std::vector<std::vector<float>>>();
    r.n_tweets = static_cast<std::uint32_t>(rows.size());
    for (const auto& row : rows) {
      if (row.size() != dim) throw ValidationError("write_lteb: row length does not match dim");
      r.values.insert(r.values.end(), row.begin(), row.end());
    }
    f.records.push_back(std::move(r));
  }
  return f;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the localhealth C++ core";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());

  m.def("param_count", &learn::param_count, py::arg("dim"));
  m.def("conv_output_len", &learn::conv_output_len, py::arg("dim"));

  m.def(
      "hash_encode",
      [](const std::string& text, int dim, int seq_len) {
        return encoding::hash_encode(text, encoding::EncoderSpec::hashing(dim, seq_len));
      },
      py::arg("text"), py::arg("dim") = 256, py::arg("seq_len") = 64);

  m.def(
      "pearson",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto r = stats::pearson(x, y);
        return py::make_tuple(r.r, r.p, r.n);
      },
      py::arg("x"), py::arg("y"), "Returns (r, two-sided p, n).");
  m.def("derive_seq_len", &stats::derive_seq_len, py::arg("p75_words"), py::arg("tokens_per_word"));
  m.def("collection_radius", &geo::collection_radius, py::arg("population"), py::arg("county_density"));

  m.def(
      "macro_f1", [](const std::vector<int>& p, const std::vector<int>& l) { return eval::macro_f1(p, l); },
      py::arg("preds"), py::arg("labels"));
  m.def(
      "accuracy", [](const std::vector<int>& p, const std::vector<int>& l) { return eval::accuracy(p, l); },
      py::arg("preds"), py::arg("labels"));

  m.def(
      "read_manifest", [](const std::filesystem::path& path) { return manifest_to_py(load_manifest(path)); },
      py::arg("path"));
  m.def(
      "read_lteb", [](const std::filesystem::path& path) { return lteb_to_py(lteb::read_file(path)); },
      py::arg("path"));
  m.def(
      "write_lteb",
      [](const std::filesystem::path& path, std::uint32_t dim, const py::list& records, std::uint16_t flags) {
        lteb::write_file(path, lteb_from_py(dim, records, flags));
      },
      py::arg("path"), py::arg("dim"), py::arg("records"), py::arg("flags") = lteb::kFlagTokenMeanPooled);
  m.def(
      "validate_lteb",
      [](const std::filesystem::path& path, const std::filesystem::path& manifest, std::optional<int> dim) {
        return lteb::load_embeddings(path, load_manifest(manifest), dim).size();
      },
      py::arg("path"), py::arg("manifest"), py::arg("dim") = py::none(),
      "Checks an LTEB file against its sample manifest; returns the number of cells.");
  m.attr("FLAG_TOKEN_MEAN_POOLED") = lteb::kFlagTokenMeanPooled;
  m.attr("FLAG_CELL_MEAN") = lteb::kFlagCellMean;

  m.def(
      "parse_response", [](const std::string& raw) { return std::string(zeroshot::to_string(zeroshot::parse_response(raw))); },
      py::arg("raw"));
  m.def("template_sha256", &zeroshot::template_sha256);
  m.def(
      "build_prompt", [](const std::vector<std::string>& tweets, int adi) { return zeroshot::build_prompt(tweets, adi); },
      py::arg("tweets"), py::arg("adi"));
}
