#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace adt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Trains per the config file and writes metrics.csv, thresholds.csv,
/// mined_ratio.csv, checkpoint.json and manifest.json into out_dir.
int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override = {});

/// Prints one JSON record with overall and per-class accuracy. With no data
/// argument the checkpoint's own validation split is evaluated; an explicit
/// dataset descriptor evaluates the whole described dataset.
int cmd_eval(const std::string& checkpoint_path,
             const std::string& data_args = "");

/// Runs the configured variant grid (adaptive threshold, similar loss, tau,
/// sim threshold, K, temperature) and writes one comparison row per variant
/// to ablation.csv. A failing variant is recorded and the rest continue.
int cmd_ablate(const std::string& config_path, const std::string& out_dir);

}  // namespace adt::cli
