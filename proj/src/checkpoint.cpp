#include "localhealth/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "localhealth/io.hpp"

namespace localhealth::learn {

namespace {

std::string array_json(std::span<const double> values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += io::format_double(values[i]);
  }
  return out + "]";
}

void read_array(const nlohmann::json& j, const char* name, std::span<double> dst) {
  if (!j.contains(name) || !j[name].is_array()) throw ValidationError(std::string("checkpoint: missing array ") + name);
  const auto& a = j[name];
  if (a.size() != dst.size()) {
    throw ValidationError(std::string("checkpoint: array ") + name + " has " + std::to_string(a.size()) +
                          " values, expected " + std::to_string(dst.size()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i].get<double>();
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& c) {
  const auto& p = c.params;
  const auto& t = c.config;
  nlohmann::ordered_json config = {{"epochs", t.epochs},
                                   {"batch_size", t.batch_size},
                                   {"peak_lr", t.peak_lr},
                                   {"warmup_frac", t.warmup_frac},
                                   {"weight_decay", t.weight_decay},
                                   {"beta1", t.beta1},
                                   {"beta2", t.beta2},
                                   {"eps", t.eps},
                                   {"eval_every", t.eval_every}};
  std::ostringstream out;
  out << "{\n"
      << "  \"format\": \"localhealth-head\",\n"
      << "  \"version\": 1,\n"
      << "  \"dim\": " << p.dim() << ",\n"
      << "  \"use_adi\": " << (c.use_adi ? "true" : "false") << ",\n"
      << "  \"threshold_rule\": " << nlohmann::json(std::string(eval::to_string(c.rule))).dump() << ",\n"
      << "  \"encoder\": " << nlohmann::json(c.encoder).dump() << ",\n"
      << "  \"text_condition\": " << nlohmann::json(c.text_condition).dump() << ",\n"
      << "  \"seed\": " << t.seed << ",\n"
      << "  \"best_epoch\": " << c.best_epoch << ",\n"
      << "  \"best_val_f1\": " << io::format_double(c.best_val_f1) << ",\n"
      << "  \"config\": " << config.dump() << ",\n"
      << "  \"conv_w\": " << array_json(p.conv_w()) << ",\n"
      << "  \"conv_b\": " << io::format_double(p.conv_b()) << ",\n"
      << "  \"fc_w\": " << array_json(p.fc_w()) << ",\n"
      << "  \"fc_b\": " << io::format_double(p.fc_b()) << ",\n"
      << "  \"fuse_w\": " << array_json(p.fuse_w()) << ",\n"
      << "  \"fuse_b\": " << io::format_double(p.fuse_b()) << "\n"
      << "}\n";
  return out.str();
}

Checkpoint checkpoint_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "localhealth-head") throw ValidationError("checkpoint: not a head checkpoint");
    if (j.value("version", 0) != 1) throw ValidationError("checkpoint: unsupported version");
    Checkpoint c;
    c.params = HeadParams(j.at("dim").get<int>());
    read_array(j, "conv_w", c.params.conv_w());
    c.params.conv_b() = j.at("conv_b").get<double>();
    read_array(j, "fc_w", c.params.fc_w());
    c.params.fc_b() = j.at("fc_b").get<double>();
    read_array(j, "fuse_w", c.params.fuse_w());
    c.params.fuse_b() = j.at("fuse_b").get<double>();
    c.use_adi = j.at("use_adi").get<bool>();
    c.rule = eval::parse_threshold_rule(j.at("threshold_rule").get<std::string>());
    c.encoder = j.value("encoder", "");
    c.text_condition = j.value("text_condition", "");
    c.best_epoch = j.value("best_epoch", 0);
    c.best_val_f1 = j.value("best_val_f1", 0.0);
    const auto& cfg = j.at("config");
    c.config.epochs = cfg.at("epochs").get<int>();
    c.config.batch_size = cfg.at("batch_size").get<int>();
    c.config.peak_lr = cfg.at("peak_lr").get<double>();
    c.config.warmup_frac = cfg.at("warmup_frac").get<double>();
    c.config.weight_decay = cfg.at("weight_decay").get<double>();
    c.config.beta1 = cfg.at("beta1").get<double>();
    c.config.beta2 = cfg.at("beta2").get<double>();
    c.config.eps = cfg.at("eps").get<double>();
    c.config.eval_every = cfg.at("eval_every").get<int>();
    c.config.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  auto out = io::open_output(path);
  out << checkpoint_to_json(ckpt);
  if (!out) throw Error("cannot write " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace localhealth::learn
