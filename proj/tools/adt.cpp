#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "adt/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"adt: adaptive dual-threshold semi-supervised trainer"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path, data_args;
  std::optional<std::uint64_t> seed;

  CLI::App* train = app.add_subcommand("train", "train a model from a config");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", seed, "override trainer.seed");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval->add_option("--data", data_args,
                   "dataset descriptor; defaults to the checkpoint's own "
                   "validation split");

  CLI::App* ablate =
      app.add_subcommand("ablate", "run the configured variant grid");
  ablate->add_option("--config", config_path, "config file")->required();
  ablate->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return adt::cli::cmd_train(config_path, out_dir, seed);
    if (eval->parsed()) return adt::cli::cmd_eval(checkpoint_path, data_args);
    if (ablate->parsed()) return adt::cli::cmd_ablate(config_path, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return adt::cli::kExitIo;
  }
  return 0;
}
