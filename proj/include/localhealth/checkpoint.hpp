// Head checkpoints as JSON. Parameter arrays are written with 17
// significant digits so that a reload is bit-exact.
#pragma once

#include <filesystem>

#include "localhealth/head.hpp"
#include "localhealth/metrics.hpp"
#include "localhealth/optim.hpp"

namespace localhealth::learn {

struct Checkpoint {
  HeadParams params;
  TrainConfig config;
  bool use_adi = false;
  eval::ThresholdRule rule = eval::ThresholdRule::LabelThreshold;
  std::string encoder;  // EncoderSpec identifier
  std::string text_condition;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace localhealth::learn
