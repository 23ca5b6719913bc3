#include "adt/cli.hpp"

#include <algorithm>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "adt/checkpoint.hpp"
#include "adt/config.hpp"
#include "adt/errors.hpp"
#include "adt/trainer.hpp"

namespace adt::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

Real median(std::vector<Real> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string metrics_row(const EpochMetrics& em) {
  std::string row = std::to_string(em.epoch);
  row += "," + format_real(em.loss_x);
  row += "," + format_real(em.loss_u1);
  row += "," + format_real(em.loss_u2);
  row += "," + format_real(em.loss_s);
  row += "," + format_real(em.loss_total);
  row += "," + std::to_string(em.high_count);
  row += "," + std::to_string(em.mid_count);
  row += "," + std::to_string(em.discard_count);
  row += "," + format_real(em.mined_ratio);
  row += "," + format_real(em.pseudo_precision);
  row += "," + format_real(em.val_accuracy);
  return row;
}

struct SeedOutcome {
  Real val_accuracy = 0.0;
  Real mined_ratio_mean = 0.0;
  Real loss_s_mean = 0.0;
  long mid_count_total = 0;
};

SeedOutcome run_one(const ResolvedConfig& rc, const Dataset& ds,
                    std::uint64_t seed) {
  TrainConfig cfg = rc.trainer;
  cfg.seed = seed;
  const SplitResult splits = split(ds, rc.data.split_spec(seed));
  const RunResult run = run_training(splits, cfg);
  SeedOutcome out;
  for (const EpochMetrics& em : run.epochs) {
    out.mined_ratio_mean += em.mined_ratio;
    out.loss_s_mean += em.loss_s;
    out.mid_count_total += em.mid_count;
  }
  const Real epochs = static_cast<Real>(run.epochs.size());
  out.mined_ratio_mean /= epochs;
  out.loss_s_mean /= epochs;
  out.val_accuracy = run.epochs.back().val_accuracy;
  return out;
}

}  // namespace

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override) {
  ResolvedConfig rc;
  try {
    auto kv = parse_config_file(config_path);
    if (seed_override) kv["trainer.seed"] = std::to_string(*seed_override);
    rc = resolve_config(kv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }

  const std::string started = timestamp_utc();
  Dataset ds;
  SplitResult splits;
  try {
    ds = rc.data.build();
    splits = split(ds, rc.data.split_spec(rc.trainer.seed));
  } catch (const FormatError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream metrics(fs::path(out_dir) / "metrics.csv");
  std::ofstream thresholds(fs::path(out_dir) / "thresholds.csv");
  std::ofstream mined(fs::path(out_dir) / "mined_ratio.csv");
  if (!metrics || !thresholds || !mined) {
    std::cerr << "io error: cannot write into " << out_dir << "\n";
    return kExitIo;
  }
  metrics << "epoch,loss_x,loss_u1,loss_u2,loss_s,loss_total,high_count,"
             "mid_count,discard_count,mined_ratio,pseudo_precision,val_acc\n";
  thresholds << "epoch";
  for (int c = 0; c < ds.num_classes; ++c) thresholds << ",class_" << c;
  thresholds << "\n";
  mined << "epoch,mined_ratio\n";

  TrainerState state = init_trainer(splits.labeled, splits.unlabeled, rc.trainer);
  Real final_val = 0.0;
  try {
    for (int e = 0; e < rc.trainer.epochs; ++e) {
      const EpochMetrics em =
          train_epoch(splits.labeled, splits.unlabeled, splits.validation,
                      &splits.unlabeled_eval_labels, state, rc.trainer, e);
      metrics << metrics_row(em) << "\n";
      thresholds << em.epoch;
      for (Eigen::Index c = 0; c < em.thresholds.size(); ++c) {
        thresholds << "," << format_real(em.thresholds[c]);
      }
      thresholds << "\n";
      mined << em.epoch << "," << format_real(em.mined_ratio) << "\n";
      final_val = em.val_accuracy;
      std::cout << "epoch " << em.epoch << " loss " << format_real(em.loss_total)
                << " val_acc " << format_real(em.val_accuracy) << "\n";
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  }
  metrics.close();
  thresholds.close();
  mined.close();

  try {
    Checkpoint ck;
    ck.params = std::move(state.params);
    ck.opt = std::move(state.opt);
    ck.reg = state.reg;
    ck.num_classes = state.num_classes;
    ck.data_descriptor = rc.data.descriptor();
    ck.split_seed = rc.data.split_spec(rc.trainer.seed).seed;
    ck.config_text = rc.canonical_text;
    ck.final_val_accuracy = final_val;
    ck.eval_with_ema = rc.trainer.eval_with_ema;
    save_checkpoint(ck, (fs::path(out_dir) / "checkpoint.json").string());

    json manifest;
    manifest["config"] = rc.canonical_text;
    manifest["seed"] = rc.trainer.seed;
    manifest["dataset"] = rc.data.descriptor();
    manifest["output_dir"] = out_dir;
    manifest["started_at"] = started;
    manifest["finished_at"] = timestamp_utc();
    manifest["final_val_accuracy"] = final_val;
    std::ofstream mf(fs::path(out_dir) / "manifest.json");
    if (!mf) throw FormatError("cannot write manifest.json");
    mf << manifest.dump(1) << "\n";
  } catch (const FormatError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_args) {
  Checkpoint ck;
  try {
    ck = load_checkpoint(checkpoint_path);
  } catch (const FormatError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitIo;
  }
  try {
    const bool own_split = data_args.empty();
    const DataSpec spec = DataSpec::from_descriptor(
        own_split ? ck.data_descriptor : data_args);
    const Dataset ds = spec.build();
    LabeledSet eval_set;
    if (own_split) {
      SplitSpec ss;
      ss.num_labeled = spec.num_labeled;
      ss.num_validation = spec.num_validation;
      ss.per_class_balance = spec.balanced;
      ss.seed = ck.split_seed;
      eval_set = split(ds, ss).validation;
    } else {
      eval_set = LabeledSet{ds.samples, ds.labels, ds.num_classes};
    }
    const ModelParams& weights = ck.eval_with_ema ? ck.opt.ema_params : ck.params;
    const EvalResult r = evaluate(weights, eval_set);
    json rec;
    rec["accuracy"] = r.accuracy;
    json per_class = json::array();
    for (Eigen::Index c = 0; c < r.per_class.size(); ++c) {
      per_class.push_back(r.per_class[c]);
    }
    rec["per_class_accuracy"] = std::move(per_class);
    rec["class_counts"] = r.class_counts;
    rec["samples"] = eval_set.samples.size();
    rec["split"] = own_split ? "validation" : "full";
    std::cout << rec.dump() << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "eval error: " << e.what() << "\n";
    return kExitIo;
  }
}

int cmd_ablate(const std::string& config_path, const std::string& out_dir) {
  ResolvedConfig rc;
  try {
    rc = resolve_config(parse_config_file(config_path));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }

  Dataset ds;
  try {
    ds = rc.data.build();
  } catch (const FormatError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const std::vector<int> adaptive_axis =
      rc.ablate.adaptive.empty()
          ? std::vector<int>{rc.trainer.use_adaptive_threshold ? 1 : 0}
          : rc.ablate.adaptive;
  const std::vector<int> similar_axis =
      rc.ablate.similar.empty()
          ? std::vector<int>{rc.trainer.use_similar_loss ? 1 : 0}
          : rc.ablate.similar;
  const std::vector<Real> tau_axis =
      rc.ablate.taus.empty() ? std::vector<Real>{rc.trainer.tau}
                             : rc.ablate.taus;
  const std::vector<Real> ts_axis = rc.ablate.sim_thresholds.empty()
                                        ? std::vector<Real>{rc.trainer.sim_threshold}
                                        : rc.ablate.sim_thresholds;
  const std::vector<int> k_axis = rc.ablate.ks.empty()
                                      ? std::vector<int>{rc.trainer.k_weak}
                                      : rc.ablate.ks;
  const std::vector<Real> temp_axis =
      rc.ablate.temperatures.empty() ? std::vector<Real>{rc.trainer.temperature}
                                     : rc.ablate.temperatures;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream table(fs::path(out_dir) / "ablation.csv");
  if (!table) {
    std::cerr << "io error: cannot write into " << out_dir << "\n";
    return kExitIo;
  }
  table << "adaptive,similar,tau,sim_threshold,k_weak,temperature,seeds,"
           "median_val_acc,mean_val_acc,min_val_acc,max_val_acc,"
           "mid_count_total,loss_s_mean,mined_ratio_mean,status\n";

  for (int adaptive : adaptive_axis) {
    for (int similar : similar_axis) {
      for (Real tau : tau_axis) {
        for (Real ts : ts_axis) {
          for (int k : k_axis) {
            for (Real temp : temp_axis) {
              ResolvedConfig variant = rc;
              variant.trainer.use_adaptive_threshold = adaptive != 0;
              variant.trainer.use_similar_loss = similar != 0;
              variant.trainer.tau = tau;
              variant.trainer.sim_threshold = ts;
              variant.trainer.k_weak = k;
              variant.trainer.temperature = temp;
              std::vector<Real> accs, mined, loss_s;
              long mid_total = 0;
              std::string status = "ok";
              try {
                for (int s = 0; s < rc.ablate.seeds; ++s) {
                  const SeedOutcome o =
                      run_one(variant, ds, rc.trainer.seed + s);
                  accs.push_back(o.val_accuracy);
                  mined.push_back(o.mined_ratio_mean);
                  loss_s.push_back(o.loss_s_mean);
                  mid_total += o.mid_count_total;
                }
              } catch (const Error& e) {
                status = "failed";
                std::cerr << "variant failed: " << e.what() << "\n";
              }
              const Real mean_acc =
                  accs.empty() ? 0.0
                               : std::accumulate(accs.begin(), accs.end(), 0.0) /
                                     accs.size();
              const Real mean_mined =
                  mined.empty() ? 0.0
                                : std::accumulate(mined.begin(), mined.end(), 0.0) /
                                      mined.size();
              const Real mean_ls =
                  loss_s.empty() ? 0.0
                                 : std::accumulate(loss_s.begin(), loss_s.end(), 0.0) /
                                       loss_s.size();
              table << adaptive << "," << similar << "," << format_real(tau)
                    << "," << format_real(ts) << "," << k << ","
                    << format_real(temp) << "," << accs.size() << ","
                    << format_real(median(accs)) << "," << format_real(mean_acc)
                    << ","
                    << format_real(accs.empty()
                                       ? 0.0
                                       : *std::min_element(accs.begin(), accs.end()))
                    << ","
                    << format_real(accs.empty()
                                       ? 0.0
                                       : *std::max_element(accs.begin(), accs.end()))
                    << "," << mid_total << "," << format_real(mean_ls) << ","
                    << format_real(mean_mined) << "," << status << "\n";
              std::cout << "variant adaptive=" << adaptive
                        << " similar=" << similar << " tau=" << format_real(tau)
                        << " ts=" << format_real(ts) << " k=" << k
                        << " T=" << format_real(temp) << " median_acc="
                        << format_real(median(accs)) << " (" << status << ")\n";
            }
          }
        }
      }
    }
  }
  return kExitOk;
}

}  // namespace adt::cli
