#pragma once

#include <string>

#include "adt/model.hpp"
#include "adt/threshold.hpp"

namespace adt {

/// Everything needed to evaluate or resume a run: live and EMA weights,
/// optimizer scalars and momentum buffers, the threshold registry, and the
/// dataset/split description the run was trained on.
struct Checkpoint {
  ModelParams params;
  OptimState opt;
  ThresholdRegistry reg{2};
  int num_classes = 2;
  std::string data_descriptor;
  std::uint64_t split_seed = 0;
  std::string config_text;
  Real final_val_accuracy = 0.0;
  bool eval_with_ema = true;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);

/// Throws FormatError on unreadable or malformed files.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace adt
