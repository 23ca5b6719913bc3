#pragma once

#include <map>
#include <string>
#include <vector>

#include "adt/data.hpp"
#include "adt/trainer.hpp"

namespace adt {

/// Dataset selection and split sizes, resolved from the data.* config keys.
struct DataSpec {
  std::string kind;  // blobs | moons | idx | csv
  int classes = 4;
  int per_class = 500;
  int dim = 2;
  Real separation = 3.0;
  std::uint64_t seed = 7;
  int n = 1000;
  Real noise = 0.1;
  std::string images;
  std::string labels;
  std::string csv;
  int num_labeled = 20;
  int num_validation = 500;
  bool balanced = true;

  /// Canonical one-line form, e.g. "blobs:classes=4,per_class=500,...".
  std::string descriptor() const;
  static DataSpec from_descriptor(const std::string& text);

  Dataset build() const;
  /// Split seed is derived from the run seed so reruns reproduce the split.
  SplitSpec split_spec(std::uint64_t run_seed) const;
};

/// Variant grid for the ablate command. Empty axes fall back to the base
/// config's single value.
struct AblateSpec {
  int seeds = 5;
  std::vector<int> adaptive;  // 0/1
  std::vector<int> similar;
  std::vector<Real> taus;
  std::vector<Real> sim_thresholds;
  std::vector<int> ks;
  std::vector<Real> temperatures;
};

struct ResolvedConfig {
  TrainConfig trainer;
  DataSpec data;
  AblateSpec ablate;
  /// Every key with its final value, one "key = value" line each, sorted.
  /// This is the text echoed into the run manifest; re-parsing it resolves
  /// to the same configuration.
  std::string canonical_text;
};

/// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
/// Duplicate keys keep the last value.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Applies defaults and validates. Unknown keys, missing required keys
/// (trainer.tau, data.kind) and malformed values throw ConfigError carrying
/// the key name.
ResolvedConfig resolve_config(const std::map<std::string, std::string>& kv);

/// Shortest decimal form that parses back to the same double. All emitted
/// files (config echo, CSV rows) use this so reruns are byte-identical.
std::string format_real(Real v);

}  // namespace adt
