#include "localhealth/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

namespace localhealth::eval {

std::string_view to_string(TextCondition c) {
  switch (c) {
    case TextCondition::MH: return "MH";
    case TextCondition::FI: return "FI";
    case TextCondition::Both: return "Both";
    case TextCondition::General: return "General";
  }
  return "?";
}

TextCondition parse_text_condition(std::string_view text) {
  const auto t = to_lower_ascii(text);
  if (t == "mh") return TextCondition::MH;
  if (t == "fi") return TextCondition::FI;
  if (t == "both" || t == "mh+fi") return TextCondition::Both;
  if (t == "general") return TextCondition::General;
  throw ValidationError("unknown text condition '" + std::string(text) + "'");
}

std::string_view to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::Set1: return "set1";
    case ExperimentId::Set2: return "set2";
    case ExperimentId::Set3: return "set3";
    case ExperimentId::Set4: return "set4";
    case ExperimentId::NortheastHoldout: return "northeast-holdout";
  }
  return "?";
}

ExperimentId parse_experiment_id(std::string_view text) {
  const auto t = to_lower_ascii(text);
  if (t == "set1" || t == "1") return ExperimentId::Set1;
  if (t == "set2" || t == "2") return ExperimentId::Set2;
  if (t == "set3" || t == "3") return ExperimentId::Set3;
  if (t == "set4" || t == "4") return ExperimentId::Set4;
  if (t == "northeast-holdout" || t == "northeast" || t == "holdout") return ExperimentId::NortheastHoldout;
  throw ValidationError("unknown experiment '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

std::vector<encoding::CellManifest> FeatureStore::sample_manifests(const Dataset& dataset, std::uint64_t sample_seed) {
  std::vector<encoding::CellManifest> out;
  out.reserve(dataset.entries.size() * 3);
  for (const auto& e : dataset.entries) {
    for (Category c : kAllCategories) out.push_back(encoding::sample_tweets(e.cell(c), sample_seed).manifest);
  }
  return out;
}

FeatureStore FeatureStore::from_hashing(const Dataset& dataset, const encoding::EncoderSpec& spec,
                                        std::uint64_t sample_seed, unsigned workers) {
  spec.validate();
  if (spec.kind != encoding::EncoderKind::Hashing) throw ValidationError("from_hashing: encoder is not a hashing encoder");
  const auto manifests = sample_manifests(dataset, sample_seed);
  FeatureStore store;
  store.dim_ = spec.dim;
  store.encoder_ = spec.identifier;
  store.cells_.resize(dataset.entries.size());
  parallel_for(dataset.entries.size(), workers, [&](std::size_t i) {
    for (Category c : kAllCategories) {
      const auto& m = manifests[3 * i + index_of(c)];
      store.cells_[i][index_of(c)] = encoding::aggregate(encoding::encode_cell(m, spec)).v_bar;
    }
  });
  return store;
}

FeatureStore FeatureStore::from_embeddings(const Dataset& dataset, const encoding::EncoderSpec& spec) {
  spec.validate();
  if (spec.embeddings.empty()) throw ValidationError("from_embeddings: no embedding file given");
  if (spec.manifest.empty()) throw ValidationError("from_embeddings: no manifest file given for " + spec.embeddings.string());
  if (!std::filesystem::exists(spec.embeddings)) {
    throw ValidationError("embedding file not found: " + spec.embeddings.string());
  }
  std::ifstream in(spec.manifest, std::ios::binary);
  if (!in) throw ValidationError("manifest file not found: " + spec.manifest.string());
  const auto manifests = encoding::read_manifest(in);
  const auto matrices = lteb::load_embeddings(spec.embeddings, manifests, spec.dim);

  FeatureStore store;
  store.dim_ = spec.dim;
  store.encoder_ = spec.identifier;
  store.cells_.resize(dataset.entries.size());
  for (std::size_t i = 0; i < dataset.entries.size(); ++i) {
    const auto& e = dataset.entries[i];
    for (Category c : kAllCategories) {
      const encoding::CellKey key{e.bg_id, e.year, c};
      auto it = matrices.find(key);
      if (it == matrices.end()) {
        throw ValidationError(spec.embeddings.string() + " has no record for " + encoding::describe(key));
      }
      store.cells_[i][index_of(c)] = encoding::aggregate(it->second).v_bar;
    }
  }
  return store;
}

std::vector<std::vector<double>> FeatureStore::text_matrix(TextCondition condition) const {
  std::vector<std::vector<double>> out;
  out.reserve(cells_.size());
  for (const auto& cell : cells_) {
    switch (condition) {
      case TextCondition::MH: out.push_back(cell[index_of(Category::MH)]); break;
      case TextCondition::FI: out.push_back(cell[index_of(Category::FI)]); break;
      case TextCondition::General: out.push_back(cell[index_of(Category::General)]); break;
      case TextCondition::Both: {
        encoding::AggregatedVector mh{{}, cell[index_of(Category::MH)]};
        encoding::AggregatedVector fi{{}, cell[index_of(Category::FI)]};
        out.push_back(encoding::combine_categories(mh, fi).v_bar);
        break;
      }
    }
  }
  return out;
}

lteb::File FeatureStore::to_cell_mean_file(const Dataset& dataset,
                                           std::span<const encoding::CellManifest> manifests) const {
  lteb::File file;
  file.flags = lteb::kFlagCellMean;
  file.dim = static_cast<std::uint32_t>(dim_);
  for (const auto& m : manifests) {
    const auto idx = dataset.find_entry(m.key.bg_id, m.key.year);
    if (!idx) throw ValidationError("cell " + encoding::describe(m.key) + " is not in the dataset");
    const auto& v = cell(*idx, m.key.category);
    lteb::Record rec;
    rec.key = m.key;
    rec.manifest_digest = m.digest();
    rec.n_tweets = 1;
    rec.values.assign(v.begin(), v.end());
    file.records.push_back(std::move(rec));
  }
  return file;
}

// ---------------------------------------------------------------------------

std::vector<Aggregate> ExperimentReport::aggregates() const {
  std::vector<Aggregate> out;
  std::map<std::string, std::size_t> pos;
  for (const auto& r : rows) {
    auto [it, inserted] = pos.emplace(r.condition, out.size());
    if (inserted) {
      Aggregate a;
      a.condition = r.condition;
      a.first_year = r.first_year;
      a.f1_min = a.f1_max = r.macro_f1;
      a.acc_min = a.acc_max = r.accuracy;
      out.push_back(a);
    }
    auto& a = out[it->second];
    ++a.n;
    a.f1_mean += r.macro_f1;
    a.acc_mean += r.accuracy;
    a.f1_min = std::min(a.f1_min, r.macro_f1);
    a.f1_max = std::max(a.f1_max, r.macro_f1);
    a.acc_min = std::min(a.acc_min, r.accuracy);
    a.acc_max = std::max(a.acc_max, r.accuracy);
  }
  for (auto& a : out) {
    a.f1_mean /= static_cast<double>(a.n);
    a.acc_mean /= static_cast<double>(a.n);
  }
  return out;
}

std::vector<learn::TrainSample> make_samples(const Dataset& dataset, const SplitAssignment& split, Split which,
                                             const std::vector<std::vector<double>>& features) {
  if (features.size() != dataset.entries.size()) throw ValidationError("make_samples: feature count mismatch");
  std::vector<learn::TrainSample> out;
  for (auto i : split.indices(which)) {
    const auto& e = dataset.entries[i];
    out.push_back({features[i], dataset.block_group(e.bg_id).adi / 100.0, e.g, e.r, dataset.tau(e.year), e.year});
  }
  return out;
}

EvalResult evaluate_predictions(std::span<const int> preds, std::span<const int> labels) {
  return {macro_f1(preds, labels), 100.0 * accuracy(preds, labels), preds.size()};
}

namespace {

struct Job {
  std::string condition;
  std::optional<int> first_year;
  std::uint64_t seed = 0;
  std::function<EvalResult(std::uint64_t)> run;
};

std::vector<int> split_labels(const Dataset& ds, const SplitAssignment& split, Split which) {
  std::vector<int> out;
  for (auto i : split.indices(which)) out.push_back(ds.entries[i].r);
  return out;
}

std::vector<double> count_row(const Dataset& ds, std::size_t i, bool mh, bool fi, bool adi) {
  const auto& e = ds.entries[i];
  const auto nc = normalized_counts(e);
  std::vector<double> row;
  if (mh) row.push_back(nc.mh);
  if (fi) row.push_back(nc.fi);
  if (adi) row.push_back(ds.block_group(e.bg_id).adi / 100.0);
  return row;
}

class Runner {
 public:
  Runner(const Dataset& ds, const ExperimentConfig& cfg) : ds_(ds), cfg_(cfg) {}

  EvalResult head(const SplitAssignment& split, const std::vector<std::vector<double>>& features, int dim,
                  bool use_adi, std::uint64_t seed) const {
    const auto train = make_samples(ds_, split, Split::Train, features);
    const auto val = make_samples(ds_, split, Split::Val, features);
    const auto test = make_samples(ds_, split, Split::Test, features);
    auto tc = cfg_.train;
    tc.seed = seed;
    const auto result = learn::train_head(train, val, dim, tc, {use_adi, cfg_.rule});
    const auto preds = learn::predict_labels(test, result.best, use_adi, cfg_.rule);
    return evaluate_predictions(preds, split_labels(ds_, split, Split::Test));
  }

  EvalResult counts(const SplitAssignment& split, bool mh, bool fi, bool adi) const {
    learn::FeatureRows rows;
    std::vector<double> targets;
    for (auto i : split.indices(Split::Train)) {
      rows.push_back(count_row(ds_, i, mh, fi, adi));
      targets.push_back(ds_.entries[i].g);
    }
    const auto model = learn::fit_count_lr(rows, targets);
    std::vector<double> g_hat, taus;
    std::vector<int> years;
    for (auto i : split.indices(Split::Test)) {
      g_hat.push_back(model.predict(count_row(ds_, i, mh, fi, adi)));
      years.push_back(ds_.entries[i].year);
      taus.push_back(ds_.tau(ds_.entries[i].year));
    }
    return evaluate_predictions(risk_predictions(g_hat, years, taus, cfg_.rule),
                                split_labels(ds_, split, Split::Test));
  }

  EvalResult majority(const SplitAssignment& split) const {
    const auto train = split_labels(ds_, split, Split::Train);
    const auto pos = std::count(train.begin(), train.end(), 1);
    const int cls = 2 * pos > static_cast<std::ptrdiff_t>(train.size()) ? 1 : 0;
    const auto labels = split_labels(ds_, split, Split::Test);
    const std::vector<int> preds(labels.size(), cls);
    return evaluate_predictions(preds, labels);
  }

  EvalResult classifier(const SplitAssignment& split, const std::vector<std::vector<double>>& features,
                        learn::ClassifierKind kind, std::uint64_t seed) const {
    learn::FeatureRows rows;
    for (auto i : split.indices(Split::Train)) rows.push_back(features[i]);
    auto tc = cfg_.train;
    tc.seed = seed;
    const auto clf = learn::fit_classifier(kind, rows, split_labels(ds_, split, Split::Train), tc);
    std::vector<int> preds;
    for (auto i : split.indices(Split::Test)) preds.push_back(clf.predict(features[i]));
    return evaluate_predictions(preds, split_labels(ds_, split, Split::Test));
  }

 private:
  const Dataset& ds_;
  const ExperimentConfig& cfg_;
};

std::string text_name(TextCondition t, bool adi) {
  return "text:" + std::string(to_string(t)) + (adi ? "+ADI" : "");
}

}  // namespace

ExperimentReport run_experiment(ExperimentId id, const Dataset& dataset, std::span<const FeatureStore> stores,
                                const ExperimentConfig& config) {
  if (dataset.empty()) throw ValidationError("run_experiment: empty dataset");
  if (!dataset.labeled()) throw ValidationError("run_experiment: dataset has no risk labels");
  if (config.seeds.empty()) throw ValidationError("run_experiment: no seeds");
  if (stores.empty()) throw ValidationError("run_experiment: no feature store");
  for (const auto& s : stores) {
    if (s.size() != dataset.entries.size()) {
      throw ValidationError("run_experiment: features for encoder '" + s.encoder() + "' do not match the dataset");
    }
  }
  config.train.validate();

  Runner runner(dataset, config);
  const FeatureStore& primary = stores.front();
  // Text matrices are materialised once and shared read-only across jobs.
  std::map<std::pair<std::size_t, TextCondition>, std::vector<std::vector<double>>> matrices;
  auto matrix = [&](std::size_t store, TextCondition t) -> const std::vector<std::vector<double>>& {
    auto key = std::pair{store, t};
    auto it = matrices.find(key);
    if (it == matrices.end()) it = matrices.emplace(key, stores[store].text_matrix(t)).first;
    return it->second;
  };

  auto forecasting = [&](std::uint64_t seed) { return forecasting_split(dataset, seed); };
  std::vector<Job> jobs;
  auto add = [&](std::string name, std::optional<int> first_year, std::function<EvalResult(std::uint64_t)> fn) {
    if (!config.only_conditions.empty() &&
        std::find(config.only_conditions.begin(), config.only_conditions.end(), name) == config.only_conditions.end()) {
      return;
    }
    for (auto seed : config.seeds) jobs.push_back({name, first_year, seed, fn});
  };

  const int dim0 = primary.dim();
  switch (id) {
    case ExperimentId::Set1: {
      add("Majority", std::nullopt, [&](std::uint64_t s) { return runner.majority(forecasting(s)); });
      struct CountCond {
        const char* name;
        bool mh, fi;
      };
      for (CountCond c : {CountCond{"MH", true, false}, CountCond{"FI", false, true}, CountCond{"Both", true, true}}) {
        for (bool adi : {false, true}) {
          add(std::string("counts:") + c.name + (adi ? "+ADI" : ""), std::nullopt,
              [&runner, &forecasting, c, adi](std::uint64_t s) { return runner.counts(forecasting(s), c.mh, c.fi, adi); });
        }
      }
      add("ADI", std::nullopt, [&](std::uint64_t s) { return runner.counts(forecasting(s), false, false, true); });
      for (TextCondition t : {TextCondition::MH, TextCondition::FI, TextCondition::Both, TextCondition::General}) {
        const auto& m = matrix(0, t);
        for (bool adi : {false, true}) {
          add(text_name(t, adi), std::nullopt,
              [&runner, &forecasting, &m, dim0, adi](std::uint64_t s) { return runner.head(forecasting(s), m, dim0, adi, s); });
        }
      }
      // Classifier baselines read the general-tweet vectors.
      const auto& general = matrix(0, TextCondition::General);
      add("LoR", std::nullopt, [&](std::uint64_t s) {
        return runner.classifier(forecasting(s), general, learn::ClassifierKind::LogReg, s);
      });
      add("SVM", std::nullopt, [&](std::uint64_t s) {
        return runner.classifier(forecasting(s), general, learn::ClassifierKind::SVM, s);
      });
      break;
    }
    case ExperimentId::Set2: {
      for (std::size_t k = 0; k < stores.size(); ++k) {
        const auto& m = matrix(k, config.text);
        const int dim = stores[k].dim();
        add("encoder=" + stores[k].encoder(), std::nullopt, [&, dim](std::uint64_t s) {
          return runner.head(forecasting(s), m, dim, config.use_adi, s);
        });
      }
      break;
    }
    case ExperimentId::Set3:
    case ExperimentId::Set4: {
      const bool spatial = id == ExperimentId::Set4;
      const auto& m = matrix(0, config.text);
      const auto& years = dataset.years;
      if (years.size() < 2) throw ValidationError("availability sweep needs at least two years");
      // Forecasting windows must leave a training year before the test year.
      const std::size_t last = spatial ? years.size() : years.size() - 1;
      for (std::size_t k = 0; k < last; ++k) {
        const int fy = years[k];
        add("first_year=" + std::to_string(fy), fy, [&, fy, spatial](std::uint64_t s) {
          const auto base = spatial ? spatial_split(dataset, s) : forecasting(s);
          return runner.head(availability_window(dataset, base, fy), m, dim0, config.use_adi, s);
        });
      }
      break;
    }
    case ExperimentId::NortheastHoldout: {
      const auto& m = matrix(0, config.text);
      add(text_name(config.text, config.use_adi), std::nullopt, [&](std::uint64_t s) {
        return runner.head(region_holdout_split(dataset, Region::Northeast, s), m, dim0, config.use_adi, s);
      });
      break;
    }
  }

  ExperimentReport report;
  report.id = id;
  if (jobs.empty()) {
    report.diagnostics.push_back("no conditions selected");
    return report;
  }
  std::vector<EvalResult> results(jobs.size());
  parallel_for(jobs.size(), config.workers, [&](std::size_t j) { results[j] = jobs[j].run(jobs[j].seed); });
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    report.rows.push_back({jobs[j].condition, jobs[j].seed, results[j].macro_f1, results[j].accuracy, jobs[j].first_year});
  }
  return report;
}

}  // namespace localhealth::eval
