// localhealth: command-line driver for the surveillance pipeline.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error. Failures print
// one JSON line to stderr followed by a human-readable message.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "localhealth/checkpoint.hpp"
#include "localhealth/experiment.hpp"
#include "localhealth/geo.hpp"
#include "localhealth/io.hpp"
#include "localhealth/lteb.hpp"
#include "localhealth/report.hpp"
#include "localhealth/sha256.hpp"
#include "localhealth/stats.hpp"
#include "localhealth/synth.hpp"
#include "localhealth/zeroshot.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace localhealth;

namespace {

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  fs::path out;
  std::uint64_t seed = 0;
  std::string profile = "fidelity";
  unsigned workers = 0;

  struct Paths {
    fs::path data;      // dataset directory (bgs.csv, tweets.jsonl, outcomes.csv, counts.csv)
    fs::path universe;  // block-group table for sample-bgs / build-queries
    std::vector<fs::path> features;  // encode output directories
    fs::path checkpoint;
  } paths;

  synth::SignalConfig synth = synth::SignalConfig::defaults();
  std::optional<std::uint64_t> synth_seed;  // defaults to the run seed
  int per_stratum = 25;

  int encoder_dim = 256;
  int encoder_seq_len = 64;

  learn::TrainConfig train;

  struct Experiment {
    std::string id = "set1";
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::string rule = "label-threshold";
    std::string text = "both";
    bool use_adi = true;
    std::vector<std::string> conditions;
    std::vector<int> hashing_dims{256, 768, 1024, 1536};
  } experiment;

  struct ZeroShot {
    std::string endpoint;
    std::string model;
    unsigned max_in_flight = 4;
    std::optional<int> year;
    std::size_t limit = 0;  // 0 = every block group
    std::string category = "General";
  } zeroshot;
};

[[noreturn]] void bad_config(const std::string& msg) { throw ValidationError("config: " + msg); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad_config(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      bad_config("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename T>
void take(const json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad_config("'" + where + "." + key + "' has the wrong type");
  }
}

void take_path(const json& obj, const char* key, fs::path& dst, const fs::path& base) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_string()) bad_config(std::string("paths.") + key + " must be a string");
  fs::path p = obj.at(key).get<std::string>();
  dst = p.is_relative() ? base / p : p;
}

void load_config_file(const fs::path& file, RunConfig& c) {
  std::ifstream in(file);
  if (!in) throw ValidationError("config file not found: " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    bad_config(std::string("invalid JSON: ") + e.what());
  }
  const fs::path base = file.parent_path();
  check_keys(j, "", {"seed", "profile", "workers", "out", "paths", "synth", "sampling", "encoder", "train",
                     "experiment", "zeroshot"});
  take(j, "seed", c.seed, "");
  take(j, "profile", c.profile, "");
  take(j, "workers", c.workers, "");
  if (j.contains("out")) c.out = base / j["out"].get<std::string>();
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    check_keys(p, "paths", {"data", "universe", "features", "checkpoint"});
    take_path(p, "data", c.paths.data, base);
    take_path(p, "universe", c.paths.universe, base);
    take_path(p, "checkpoint", c.paths.checkpoint, base);
    if (p.contains("features")) {
      c.paths.features.clear();
      const auto& f = p["features"];
      if (f.is_string()) c.paths.features.push_back(base / f.get<std::string>());
      else if (f.is_array()) for (const auto& x : f) c.paths.features.push_back(base / x.get<std::string>());
      else bad_config("paths.features must be a string or a list");
    }
  }
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    check_keys(s, "synth", {"seed", "n_bgs", "years", "base", "beta_text", "beta_adi", "noise_sigma", "distress_alpha",
                            "distress_beta", "tweets_min", "tweets_max", "words_min", "words_max",
                            "sparse_bg_fraction", "sparse_tweets_max", "missing_outcome_fraction", "general_cap",
                            "distress_pool", "neutral_pool"});
    auto& t = c.synth;
    if (s.contains("seed")) {
      std::uint64_t v = 0;
      take(s, "seed", v, "synth");
      c.synth_seed = v;
    }
    take(s, "n_bgs", t.n_bgs, "synth");
    take(s, "years", t.years, "synth");
    take(s, "base", t.base, "synth");
    take(s, "beta_text", t.beta_text, "synth");
    take(s, "beta_adi", t.beta_adi, "synth");
    take(s, "noise_sigma", t.noise_sigma, "synth");
    take(s, "distress_alpha", t.distress_alpha, "synth");
    take(s, "distress_beta", t.distress_beta, "synth");
    take(s, "tweets_min", t.tweets_min, "synth");
    take(s, "tweets_max", t.tweets_max, "synth");
    take(s, "words_min", t.words_min, "synth");
    take(s, "words_max", t.words_max, "synth");
    take(s, "sparse_bg_fraction", t.sparse_bg_fraction, "synth");
    take(s, "sparse_tweets_max", t.sparse_tweets_max, "synth");
    take(s, "missing_outcome_fraction", t.missing_outcome_fraction, "synth");
    take(s, "general_cap", t.general_cap, "synth");
    take(s, "distress_pool", t.distress_pool, "synth");
    take(s, "neutral_pool", t.neutral_pool, "synth");
  }
  if (j.contains("sampling")) {
    check_keys(j["sampling"], "sampling", {"per_stratum"});
    take(j["sampling"], "per_stratum", c.per_stratum, "sampling");
  }
  if (j.contains("encoder")) {
    const auto& e = j["encoder"];
    check_keys(e, "encoder", {"dim", "seq_len"});
    take(e, "dim", c.encoder_dim, "encoder");
    take(e, "seq_len", c.encoder_seq_len, "encoder");
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    check_keys(t, "train", {"epochs", "batch_size", "peak_lr", "warmup_frac", "weight_decay", "beta1", "beta2", "eps",
                            "eval_every"});
    take(t, "epochs", c.train.epochs, "train");
    take(t, "batch_size", c.train.batch_size, "train");
    take(t, "peak_lr", c.train.peak_lr, "train");
    take(t, "warmup_frac", c.train.warmup_frac, "train");
    take(t, "weight_decay", c.train.weight_decay, "train");
    take(t, "beta1", c.train.beta1, "train");
    take(t, "beta2", c.train.beta2, "train");
    take(t, "eps", c.train.eps, "train");
    take(t, "eval_every", c.train.eval_every, "train");
  }
  if (j.contains("experiment")) {
    const auto& e = j["experiment"];
    check_keys(e, "experiment", {"id", "seeds", "rule", "text", "use_adi", "conditions", "hashing_dims"});
    take(e, "id", c.experiment.id, "experiment");
    take(e, "seeds", c.experiment.seeds, "experiment");
    take(e, "rule", c.experiment.rule, "experiment");
    take(e, "text", c.experiment.text, "experiment");
    take(e, "use_adi", c.experiment.use_adi, "experiment");
    take(e, "conditions", c.experiment.conditions, "experiment");
    take(e, "hashing_dims", c.experiment.hashing_dims, "experiment");
  }
  if (j.contains("zeroshot")) {
    const auto& z = j["zeroshot"];
    check_keys(z, "zeroshot", {"endpoint", "model", "max_in_flight", "year", "limit", "category"});
    take(z, "endpoint", c.zeroshot.endpoint, "zeroshot");
    take(z, "model", c.zeroshot.model, "zeroshot");
    take(z, "max_in_flight", c.zeroshot.max_in_flight, "zeroshot");
    if (z.contains("year")) c.zeroshot.year = z["year"].get<int>();
    take(z, "limit", c.zeroshot.limit, "zeroshot");
    take(z, "category", c.zeroshot.category, "zeroshot");
  }
}

json config_snapshot(const RunConfig& c, const std::string& command) {
  json paths = {{"data", c.paths.data.string()},
                {"universe", c.paths.universe.string()},
                {"features", json::array()},
                {"checkpoint", c.paths.checkpoint.string()}};
  for (const auto& f : c.paths.features) paths["features"].push_back(f.string());
  const auto& s = c.synth;
  json zs = {{"endpoint", c.zeroshot.endpoint},
             {"model", c.zeroshot.model},
             {"max_in_flight", c.zeroshot.max_in_flight},
             {"limit", c.zeroshot.limit},
             {"category", c.zeroshot.category}};
  if (c.zeroshot.year) zs["year"] = *c.zeroshot.year;
  return {
      {"command", command},
      {"seed", c.seed},
      {"profile", c.profile},
      {"workers", c.workers},
      {"out", c.out.string()},
      {"paths", paths},
      {"synth",
       {{"seed", c.synth_seed.value_or(c.seed)},
        {"n_bgs", s.n_bgs},
        {"years", s.years},
        {"base", s.base},
        {"beta_text", s.beta_text},
        {"beta_adi", s.beta_adi},
        {"noise_sigma", s.noise_sigma},
        {"distress_alpha", s.distress_alpha},
        {"distress_beta", s.distress_beta},
        {"tweets_min", s.tweets_min},
        {"tweets_max", s.tweets_max},
        {"words_min", s.words_min},
        {"words_max", s.words_max},
        {"sparse_bg_fraction", s.sparse_bg_fraction},
        {"sparse_tweets_max", s.sparse_tweets_max},
        {"missing_outcome_fraction", s.missing_outcome_fraction},
        {"general_cap", s.general_cap},
        {"distress_pool", s.distress_pool},
        {"neutral_pool", s.neutral_pool}}},
      {"sampling", {{"per_stratum", c.per_stratum}}},
      {"encoder", {{"dim", c.encoder_dim}, {"seq_len", c.encoder_seq_len}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"peak_lr", c.train.peak_lr},
        {"warmup_frac", c.train.warmup_frac},
        {"weight_decay", c.train.weight_decay},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"eps", c.train.eps},
        {"eval_every", c.train.eval_every}}},
      {"experiment",
       {{"id", c.experiment.id},
        {"seeds", c.experiment.seeds},
        {"rule", c.experiment.rule},
        {"text", c.experiment.text},
        {"use_adi", c.experiment.use_adi},
        {"conditions", c.experiment.conditions},
        {"hashing_dims", c.experiment.hashing_dims}}},
      {"zeroshot", zs}};
}

void apply_profile(RunConfig& c) {
  if (c.profile == "ci") {
    c.train.epochs = std::min(c.train.epochs, learn::TrainConfig::ci().epochs);
    if (c.experiment.seeds.size() > 3) c.experiment.seeds.resize(3);
  } else if (c.profile != "fidelity") {
    throw ValidationError("unknown profile '" + c.profile + "' (expected fidelity or ci)");
  }
}

// ---------------------------------------------------------------------------
// Outputs

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  const fs::path& dir() const { return dir_; }
  fs::path path(const std::string& name) const { return dir_ / name; }

  template <typename Fn>
  void write(const std::string& name, Fn&& fn) {
    const auto p = path(name);
    auto out = io::open_output(p);
    fn(out);
    out.flush();
    if (!out) throw Error("cannot write " + p.string());
    add(p);
  }

  void add(const fs::path& p) {
    if (std::find(files_.begin(), files_.end(), p) == files_.end()) files_.push_back(p);
  }

  void finish(const std::string& command, const json& config) {
    write("config.resolved.json", [&](std::ostream& o) { o << config.dump(2) << '\n'; });
    json files = json::array();
    for (const auto& f : files_) {
      std::ifstream in(f, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      const auto bytes = buf.str();
      files.push_back({{"path", fs::relative(f, dir_).generic_string()},
                       {"bytes", bytes.size()},
                       {"sha256", to_hex(sha256(bytes))}});
    }
    json manifest = {{"command", command}, {"files", files}};
    auto out = io::open_output(path("manifest.json"));
    out << manifest.dump(2) << '\n';
    if (!out) throw Error("cannot write manifest.json");
  }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

// ---------------------------------------------------------------------------
// Shared steps

Dataset load_labeled_dataset(const RunConfig& c) {
  require(!c.paths.data.empty(), "--data is required");
  require(fs::is_directory(c.paths.data), "data directory not found: " + c.paths.data.string());
  auto built = io::load_dataset(io::DatasetFiles::in_directory(c.paths.data));
  for (const auto& d : built.stats.diagnostics) std::cerr << "note: " << d << '\n';
  if (built.dataset.empty()) throw ValidationError("dataset is empty after cleaning (" + c.paths.data.string() + ")");
  if (!built.dataset.labeled()) throw ValidationError("dataset has too few block groups to assign risk labels");
  return std::move(built.dataset);
}

encoding::EncoderSpec features_spec(const fs::path& dir) {
  const auto meta_path = dir / "encoder.json";
  std::ifstream in(meta_path);
  if (!in) throw ValidationError("feature directory lacks encoder.json: " + dir.string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("encoder.json: " + std::string(e.what()));
  }
  fs::path emb = meta.value("embeddings", "features.lteb");
  fs::path man = meta.value("manifest", "samples.jsonl");
  return encoding::EncoderSpec::external(dir / emb, dir / man, meta.at("dim").get<int>(),
                                         meta.value("identifier", std::string("external")));
}

std::vector<eval::FeatureStore> load_feature_stores(const RunConfig& c, const Dataset& ds, bool all_dims) {
  std::vector<eval::FeatureStore> stores;
  if (!c.paths.features.empty()) {
    for (const auto& dir : c.paths.features) stores.push_back(eval::FeatureStore::from_embeddings(ds, features_spec(dir)));
    return stores;
  }
  std::cerr << "note: no --features given; hash-encoding the dataset in memory\n";
  const std::vector<int> dims = all_dims ? c.experiment.hashing_dims : std::vector<int>{c.encoder_dim};
  for (int d : dims) {
    stores.push_back(eval::FeatureStore::from_hashing(ds, encoding::EncoderSpec::hashing(d, c.encoder_seq_len), c.seed,
                                                      c.workers));
  }
  return stores;
}

eval::ExperimentConfig experiment_config(const RunConfig& c) {
  eval::ExperimentConfig e;
  e.train = c.train;
  e.seeds = c.experiment.seeds;
  e.rule = eval::parse_threshold_rule(c.experiment.rule);
  e.text = eval::parse_text_condition(c.experiment.text);
  e.use_adi = c.experiment.use_adi;
  e.workers = c.workers;
  e.only_conditions = c.experiment.conditions;
  return e;
}

void emit(const eval::ExperimentReport& report, Outputs& out) {
  for (const auto& p : eval::emit_report(report, out.dir())) out.add(p);
  std::cout << eval::summary_text(report);
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_sample_bgs(const RunConfig& c, Outputs& out) {
  require(!c.paths.universe.empty(), "--universe is required");
  auto in = io::open_input(c.paths.universe);
  const auto universe = io::read_block_groups(in);
  const auto result = geo::stratify_and_sample(universe, c.per_stratum, c.seed);
  for (const auto& d : result.diagnostics) std::cerr << "note: " << d << '\n';
  out.write("selected_bgs.csv", [&](std::ostream& o) { io::write_block_groups(o, result.selected); });
  std::cout << "selected " << result.selected.size() << " block groups from " << universe.size() << '\n';
}

void cmd_build_queries(const RunConfig& c, Outputs& out) {
  require(!c.paths.universe.empty(), "--universe is required");
  auto in = io::open_input(c.paths.universe);
  const auto bgs = io::read_block_groups(in);
  const auto keywords = geo::KeywordTable::bundled();
  std::size_t n = 0;
  out.write("queries.jsonl", [&](std::ostream& o) {
    for (const auto& bg : bgs) {
      for (int year : c.synth.years) {
        for (Category cat : kAllCategories) {
          o << geo::to_json_line(geo::build_query(bg, year, cat, keywords)) << '\n';
          ++n;
        }
      }
    }
  });
  std::cout << "wrote " << n << " queries\n";
}

void cmd_synth(const RunConfig& c, Outputs& out) {
  Diagnostics diag;
  const auto seed = c.synth_seed.value_or(c.seed);
  const auto universe = synth::generate_universe(c.synth, seed, &diag);
  for (const auto& d : diag) std::cerr << "note: " << d << '\n';
  const auto corpus = synth::generate_corpus(universe, c.synth, seed);
  const auto files = io::DatasetFiles::in_directory(out.dir());
  out.write(files.bgs.filename().string(), [&](std::ostream& o) { io::write_block_groups(o, universe); });
  out.write(files.tweets.filename().string(), [&](std::ostream& o) { io::write_tweets(o, corpus.tweets); });
  out.write(files.outcomes.filename().string(), [&](std::ostream& o) { io::write_outcomes(o, corpus.outcomes); });
  out.write(files.counts.filename().string(), [&](std::ostream& o) { io::write_counts(o, corpus.counts); });
  out.write("latent.csv", [&](std::ostream& o) {
    o << "bg_id,year,pi,distress_token_rate,stream_size\n";
    for (const auto& l : corpus.latent) {
      o << l.bg_id << ',' << l.year << ',' << io::format_double(l.pi) << ','
        << io::format_double(l.distress_token_rate) << ',' << l.stream_size << '\n';
    }
  });
  std::cout << "generated " << universe.size() << " block groups, " << corpus.tweets.size() << " tweet records\n";
}

void cmd_ingest(const RunConfig& c, Outputs& out) {
  require(!c.paths.data.empty(), "--data is required");
  auto built = io::load_dataset(io::DatasetFiles::in_directory(c.paths.data));
  const auto& ds = built.dataset;
  const auto& st = built.stats;
  if (ds.empty()) throw ValidationError("no block group survived cleaning");
  const auto dir = out.path("dataset");
  io::save_dataset(ds, dir);
  for (const auto& f : {"bgs.csv", "tweets.jsonl", "outcomes.csv", "counts.csv"}) out.add(dir / f);
  out.write("labels.csv", [&](std::ostream& o) {
    o << "bg_id,year,g,tau,r\n";
    for (const auto& e : ds.entries) {
      o << e.bg_id << ',' << e.year << ',' << io::format_double(e.g) << ','
        << (ds.labeled() ? io::format_double(ds.tau(e.year)) : "") << ',' << e.r << '\n';
    }
  });
  json report = {{"universe", st.universe},
                 {"retained", st.retained},
                 {"dropped_missing_outcome", st.dropped_missing_outcome},
                 {"dropped_empty_cell", st.dropped_empty_cell},
                 {"duplicate_tweets", st.duplicate_tweets},
                 {"unknown_bg_tweets", st.unknown_bg_tweets},
                 {"out_of_range_year_tweets", st.out_of_range_year_tweets},
                 {"missing_counts", st.missing_counts},
                 {"diagnostics", st.diagnostics}};
  out.write("ingest_report.json", [&](std::ostream& o) { o << report.dump(2) << '\n'; });
  std::cout << "retained " << st.retained << " of " << st.universe << " block groups\n";
}

void cmd_stats(const RunConfig& c, Outputs& out) {
  require(!c.paths.data.empty(), "--data is required");
  auto built = io::load_dataset(io::DatasetFiles::in_directory(c.paths.data));
  const auto& ds = built.dataset;
  if (ds.empty()) throw ValidationError("stats: dataset is empty");
  const auto corr = stats::correlation_report(ds);
  out.write("correlation.csv", [&](std::ostream& o) { stats::write_correlation_csv(o, corr); });
  const auto dist = stats::distribution_report(ds);
  out.write("distribution.csv", [&](std::ostream& o) { stats::write_distribution_csv(o, dist); });
  // Sequence length from the 75th percentile of words per tweet over all cells.
  double p75 = 0.0;
  for (const auto& row : dist.words_per_tweet) p75 = std::max(p75, row.values[3]);
  const int seq = stats::derive_seq_len(std::max(1, static_cast<int>(std::ceil(p75))), 1.32);
  out.write("seq_len.json", [&](std::ostream& o) {
    o << json{{"p75_words", p75}, {"tokens_per_word", 1.32}, {"seq_len", seq}}.dump() << '\n';
  });
  std::cout << "correlations for " << ds.years.size() << " years over " << ds.bgs.size() << " block groups\n";
}

void cmd_encode(const RunConfig& c, Outputs& out) {
  const auto ds = load_labeled_dataset(c);
  const auto spec = encoding::EncoderSpec::hashing(c.encoder_dim, c.encoder_seq_len);
  const auto manifests = eval::FeatureStore::sample_manifests(ds, c.seed);
  const auto store = eval::FeatureStore::from_hashing(ds, spec, c.seed, c.workers);
  out.write("samples.jsonl", [&](std::ostream& o) { encoding::write_manifest(o, manifests); });
  lteb::write_file(out.path("features.lteb"), store.to_cell_mean_file(ds, manifests));
  out.add(out.path("features.lteb"));
  json meta = {{"identifier", spec.identifier}, {"kind", "hashing"},        {"dim", spec.dim},
               {"seq_len", spec.seq_len},       {"sample_seed", c.seed},   {"embeddings", "features.lteb"},
               {"manifest", "samples.jsonl"}};
  out.write("encoder.json", [&](std::ostream& o) { o << meta.dump(2) << '\n'; });
  std::cout << "encoded " << manifests.size() << " cells with " << spec.identifier << '\n';
}

void cmd_train(const RunConfig& c, Outputs& out) {
  const auto ds = load_labeled_dataset(c);
  const auto stores = load_feature_stores(c, ds, false);
  const auto& store = stores.front();
  const auto text = eval::parse_text_condition(c.experiment.text);
  const auto rule = eval::parse_threshold_rule(c.experiment.rule);
  const auto matrix = store.text_matrix(text);
  const auto split = forecasting_split(ds, c.seed);
  const auto train = eval::make_samples(ds, split, Split::Train, matrix);
  const auto val = eval::make_samples(ds, split, Split::Val, matrix);
  const auto test = eval::make_samples(ds, split, Split::Test, matrix);
  auto tc = c.train;
  tc.seed = c.seed;
  const auto result = learn::train_head(train, val, store.dim(), tc, {c.experiment.use_adi, rule});

  learn::Checkpoint ckpt{result.best, tc, c.experiment.use_adi, rule, store.encoder(),
                         std::string(eval::to_string(text)), result.best_epoch, result.best_val_f1};
  learn::save_checkpoint(out.path("checkpoint.json"), ckpt);
  out.add(out.path("checkpoint.json"));
  out.write("trace.csv", [&](std::ostream& o) {
    o << "epoch,batch_loss,train_mse,val_mse,val_f1\n";
    for (const auto& r : result.trace) {
      o << r.epoch << ',' << io::format_double(r.batch_loss) << ',';
      if (r.evaluated) {
        o << io::format_double(r.train_mse) << ',' << io::format_double(r.val_mse) << ',' << io::format_double(r.val_f1);
      } else {
        o << ",,";
      }
      o << '\n';
    }
  });
  std::vector<int> labels;
  for (const auto& s : test) labels.push_back(s.r);
  const auto res = eval::evaluate_predictions(learn::predict_labels(test, result.best, c.experiment.use_adi, rule), labels);
  json m = {{"best_epoch", result.best_epoch}, {"best_val_f1", result.best_val_f1},
            {"test_macro_f1", res.macro_f1}, {"test_accuracy", res.accuracy}, {"n_test", res.n}};
  out.write("train_metrics.json", [&](std::ostream& o) { o << m.dump(2) << '\n'; });
  std::cout << "best epoch " << result.best_epoch << " (val macro-F1 " << result.best_val_f1 << "), test macro-F1 "
            << res.macro_f1 << '\n';
}

void score_checkpoint(const RunConfig& c, const Dataset& ds, const std::vector<eval::FeatureStore>& stores,
                      Outputs& out) {
  const auto ckpt = learn::load_checkpoint(c.paths.checkpoint);
  const auto& store = stores.front();
  if (ckpt.params.dim() != store.dim()) {
    throw ValidationError("checkpoint dim " + std::to_string(ckpt.params.dim()) + " does not match features dim " +
                          std::to_string(store.dim()));
  }
  const auto matrix = store.text_matrix(eval::parse_text_condition(ckpt.text_condition.empty() ? "both" : ckpt.text_condition));
  const auto split = forecasting_split(ds, ckpt.config.seed);
  const auto test = eval::make_samples(ds, split, Split::Test, matrix);
  std::vector<int> labels;
  for (const auto& s : test) labels.push_back(s.r);
  const auto res = eval::evaluate_predictions(learn::predict_labels(test, ckpt.params, ckpt.use_adi, ckpt.rule), labels);
  json m = {{"checkpoint", c.paths.checkpoint.string()}, {"test_macro_f1", res.macro_f1},
            {"test_accuracy", res.accuracy}, {"n_test", res.n}};
  out.write("checkpoint_metrics.json", [&](std::ostream& o) { o << m.dump(2) << '\n'; });
  std::cout << "checkpoint test macro-F1 " << res.macro_f1 << ", accuracy " << res.accuracy << "%\n";
}

void cmd_evaluate(const RunConfig& c, Outputs& out) {
  const auto ds = load_labeled_dataset(c);
  const auto id = eval::parse_experiment_id(c.experiment.id);
  const auto stores = load_feature_stores(c, ds, id == eval::ExperimentId::Set2);
  if (!c.paths.checkpoint.empty()) score_checkpoint(c, ds, stores, out);
  emit(eval::run_experiment(id, ds, stores, experiment_config(c)), out);
}

void cmd_sweep(const RunConfig& c, Outputs& out, int set) {
  require(set == 3 || set == 4, "--set must be 3 or 4");
  const auto ds = load_labeled_dataset(c);
  const auto stores = load_feature_stores(c, ds, false);
  const auto id = set == 3 ? eval::ExperimentId::Set3 : eval::ExperimentId::Set4;
  emit(eval::run_experiment(id, ds, stores, experiment_config(c)), out);
}

void cmd_zeroshot(const RunConfig& c, Outputs& out, bool dry_run) {
  const auto ds = load_labeled_dataset(c);
  const int year = c.zeroshot.year.value_or(ds.years.back());
  const auto category = parse_category(c.zeroshot.category);
  std::unique_ptr<zeroshot::ChatClient> client;
  if (!dry_run) {
    require(!c.zeroshot.endpoint.empty(), "zeroshot.endpoint is not configured");
    client = zeroshot::make_http_client({c.zeroshot.endpoint, c.zeroshot.model, "", std::chrono::seconds(120)});
  }
  zeroshot::ClassifyOptions opts;
  opts.max_in_flight = c.zeroshot.max_in_flight;
  std::vector<int> preds, labels;
  std::size_t done = 0;
  out.write(dry_run ? "prompts.jsonl" : "votes.jsonl", [&](std::ostream& o) {
    for (const auto& e : ds.entries) {
      if (e.year != year) continue;
      if (c.zeroshot.limit && done >= c.zeroshot.limit) break;
      std::vector<std::string> texts;
      for (const auto& t : e.cell(category)) texts.push_back(t.text);
      const int adi = ds.block_group(e.bg_id).adi;
      if (dry_run) {
        const auto draws = zeroshot::sample_with_replacement(texts.size(), zeroshot::sampling_seed(c.seed, e.bg_id, year));
        for (std::size_t k = 0; k < draws.size(); ++k) {
          std::vector<std::string> chosen;
          for (auto i : draws[k]) chosen.push_back(texts[i]);
          o << json{{"bg_id", e.bg_id}, {"year", year}, {"sample", k}, {"prompt", zeroshot::build_prompt(chosen, adi)}}.dump()
            << '\n';
        }
      } else {
        const auto packet = zeroshot::classify_bg(texts, adi, e.bg_id, year, *client, c.seed, opts);
        json answers = json::array();
        for (auto a : packet.responses) answers.push_back(std::string(zeroshot::to_string(a)));
        o << json{{"bg_id", e.bg_id},
                  {"year", year},
                  {"responses", answers},
                  {"count_a", packet.count_a},
                  {"unparseable", packet.count_unparseable},
                  {"verdict", packet.verdict},
                  {"label", e.r}}
                 .dump()
          << '\n';
        preds.push_back(packet.verdict);
        labels.push_back(e.r);
      }
      ++done;
    }
  });
  if (!dry_run && !preds.empty()) {
    const auto res = eval::evaluate_predictions(preds, labels);
    json m = {{"year", year}, {"n", res.n}, {"macro_f1", res.macro_f1}, {"accuracy", res.accuracy}};
    out.write("zeroshot_metrics.json", [&](std::ostream& o) { o << m.dump(2) << '\n'; });
    std::cout << "zero-shot macro-F1 " << res.macro_f1 << " over " << res.n << " block groups\n";
  } else {
    std::cout << "rendered " << done * zeroshot::kSamplesPerBg << " prompts for " << done << " block groups\n";
  }
}

void print_failure(const char* kind, const std::string& message) {
  std::cerr << json{{"status", "error"}, {"kind", kind}, {"message", message}}.dump() << '\n';
  std::cerr << "localhealth: " << kind << " error: " << message << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"localhealth: neighborhood mental-health surveillance pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file, out_dir, profile;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  app.add_option("--config", config_file, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "run seed");
  app.add_option("--profile", profile, "fidelity or ci")->check(CLI::IsMember({"fidelity", "ci"}));
  app.add_option("--workers", workers, "worker threads (0 = all cores)");

  std::string data, universe, checkpoint, experiment, text, rule, category;
  std::vector<std::string> features;
  int per_stratum = 0, n_bgs = 0, epochs = 0, set = 0, dim = 0, year = 0;
  std::size_t n_seeds = 0, limit = 0;
  bool no_adi = false, dry_run = false;

  auto* sample = app.add_subcommand("sample-bgs", "stratified block-group sample from a universe table");
  sample->add_option("--universe", universe, "block-group table (CSV)");
  sample->add_option("--per-stratum", per_stratum, "block groups per region x ADI decile");

  auto* queries = app.add_subcommand("build-queries", "collection queries for a block-group table");
  queries->add_option("--universe", universe, "block-group table (CSV)");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic universe and corpus");
  synth_cmd->add_option("--n-bgs", n_bgs, "number of block groups");

  auto* ingest = app.add_subcommand("ingest", "join and clean raw tables");
  auto* stats_cmd = app.add_subcommand("stats", "correlation and distribution tables");
  auto* encode = app.add_subcommand("encode", "sample and hash-encode every cell");
  encode->add_option("--dim", dim, "hashing dimension");
  auto* train = app.add_subcommand("train", "train one head on the forecasting split");
  auto* evaluate = app.add_subcommand("evaluate", "run an experiment suite and emit its report");
  evaluate->add_option("--experiment", experiment, "set1 | set2 | set3 | set4 | northeast-holdout");
  evaluate->add_option("--checkpoint", checkpoint, "also score this checkpoint on the test split");
  auto* sweep = app.add_subcommand("sweep", "data-availability sweep");
  sweep->add_option("--set", set, "3 (forecasting) or 4 (spatial)")->required();
  auto* zs = app.add_subcommand("zeroshot", "zero-shot classification with a chat-completion model");
  zs->add_option("--year", year, "evaluation year (default: last)");
  zs->add_option("--limit", limit, "at most this many block groups");
  zs->add_option("--category", category, "tweet category used for prompts");
  zs->add_flag("--dry-run", dry_run, "render prompts without sending requests");

  for (auto* sc : {ingest, stats_cmd, encode, train, evaluate, sweep, zs}) {
    sc->add_option("--data", data, "dataset directory");
  }
  for (auto* sc : {train, evaluate, sweep}) {
    sc->add_option("--features", features, "encode output directory (repeatable)");
    sc->add_option("--epochs", epochs, "training epochs");
    sc->add_option("--seeds", n_seeds, "use seeds 0..N-1");
    sc->add_option("--text", text, "MH | FI | both | General");
    sc->add_option("--rule", rule, "label-threshold | predicted-percentile");
    sc->add_flag("--no-adi", no_adi, "disable ADI fusion");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_failure("validation", e.what());
    return 1;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    RunConfig c;
    if (!config_file.empty()) load_config_file(config_file, c);
    auto given = [&](const char* opt) {
      for (CLI::App* a : {&app, cmd}) {
        if (const auto* o = a->get_option_no_throw(opt); o && o->count() > 0) return true;
      }
      return false;
    };
    if (given("--out")) c.out = out_dir;
    if (given("--seed")) c.seed = seed;
    if (given("--profile")) c.profile = profile;
    if (given("--workers")) c.workers = workers;
    if (given("--data")) c.paths.data = data;
    if (given("--universe")) c.paths.universe = universe;
    if (given("--checkpoint")) c.paths.checkpoint = checkpoint;
    if (given("--features")) c.paths.features.assign(features.begin(), features.end());
    if (given("--per-stratum")) c.per_stratum = per_stratum;
    if (given("--n-bgs")) c.synth.n_bgs = n_bgs;
    if (given("--dim")) c.encoder_dim = dim;
    if (given("--epochs")) c.train.epochs = epochs;
    if (given("--experiment")) c.experiment.id = experiment;
    if (given("--text")) c.experiment.text = text;
    if (given("--rule")) c.experiment.rule = rule;
    if (no_adi) c.experiment.use_adi = false;
    if (given("--seeds")) {
      c.experiment.seeds.clear();
      for (std::size_t s = 0; s < n_seeds; ++s) c.experiment.seeds.push_back(s);
    }
    if (given("--year")) c.zeroshot.year = year;
    if (given("--limit")) c.zeroshot.limit = limit;
    if (given("--category")) c.zeroshot.category = category;
    if (name == "sweep") c.experiment.id = set == 3 ? "set3" : "set4";
    apply_profile(c);
    c.train.validate();
    c.synth.validate();
    if (c.out.empty()) throw ValidationError("--out is required");
    // Inputs are never written: refuse an output directory that is also an input.
    if (!c.paths.data.empty() && fs::exists(c.out) && fs::exists(c.paths.data) &&
        fs::equivalent(c.out, c.paths.data)) {
      throw ValidationError("--out must differ from --data");
    }
    fs::create_directories(c.out);

    Outputs out(c.out);
    if (name == "sample-bgs") cmd_sample_bgs(c, out);
    else if (name == "build-queries") cmd_build_queries(c, out);
    else if (name == "synth") cmd_synth(c, out);
    else if (name == "ingest") cmd_ingest(c, out);
    else if (name == "stats") cmd_stats(c, out);
    else if (name == "encode") cmd_encode(c, out);
    else if (name == "train") cmd_train(c, out);
    else if (name == "evaluate") cmd_evaluate(c, out);
    else if (name == "sweep") cmd_sweep(c, out, set);
    else if (name == "zeroshot") cmd_zeroshot(c, out, dry_run);
    out.finish(name, config_snapshot(c, name));
    return 0;
  } catch (const ValidationError& e) {
    print_failure("validation", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_failure("runtime", e.what());
    return 2;
  }
}
