#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adt/augment.hpp"
#include "adt/data.hpp"
#include "adt/losses.hpp"
#include "adt/model.hpp"
#include "adt/threshold.hpp"

namespace adt {

/// How the anchor prediction q_bar is produced: the per-step K-view average,
/// or a per-sample exponential moving average of those averages carried
/// across steps and epochs.
enum class QBarMode { ViewAverage, CrossEpochEma };

struct ModelSpec {
  std::vector<int> hidden{64, 64};
  bool use_conv = false;
  int conv_filters = 8;
  int conv_kernel = 3;
};

struct TrainConfig {
  Real tau = 0.95;
  Real sim_threshold = 0.9;
  Real temperature = 0.5;
  int k_weak = 2;
  int k_strong = 1;
  LossWeights weights;
  int batch_size = 8;
  int epochs = 10;
  int iterations_per_epoch = 50;

  Real base_lr = 0.03;
  Real weight_decay = 0.0005;
  Real momentum = 0.9;
  Real ema_decay = 0.999;

  bool use_adaptive_threshold = true;
  bool use_similar_loss = true;
  QBarMode q_bar_mode = QBarMode::ViewAverage;
  Real q_bar_ema_decay = 0.999;
  bool eval_with_ema = true;

  int strong_ops_per_sample = 2;
  Real augment_magnitude = 0.5;

  ModelSpec model;
  std::uint64_t seed = 1;

  long total_steps() const {
    return static_cast<long>(epochs) * iterations_per_epoch;
  }
  void validate() const;  // throws InvalidParameterError on bad fields
};

struct LabeledBatch {
  std::vector<Sample> inputs;
  std::vector<int> labels;
};

struct UnlabeledBatch {
  std::vector<Sample> inputs;
};

struct TrainerState {
  ModelParams params;
  OptimState opt;
  ThresholdRegistry reg;
  std::unordered_map<std::int64_t, ProbVector> q_bar_ema;
  AugmentPolicy weak_policy;
  AugmentPolicy strong_policy;
  int num_classes = 0;
};

/// Everything one training step needs, frozen after the forward passes that
/// produce pseudo labels: augmented views, stop-gradient targets q_bar/q_hat,
/// and the gate route of every strong-view entry. Loss and gradient are pure
/// functions of (plan, params), which is what makes the finite-difference
/// check of the assembled gradient possible.
struct PlanEntry {
  Sample view;
  ProbVector q_bar;
  ProbVector q_hat;
  GateRoute route = GateRoute::Discarded;
  std::int64_t sample_id = -1;
};

struct StepPlan {
  std::vector<LabeledExample> labeled;
  std::vector<PlanEntry> entries;  // B * k_strong strong-view entries
  int num_classes = 0;
};

struct StepLosses {
  Real l_x = 0.0;
  Real l_u1 = 0.0;
  Real l_u2 = 0.0;
  Real l_s = 0.0;
  Real total = 0.0;
};

struct StepMetrics {
  StepLosses losses;
  int high_count = 0;
  int mid_count = 0;
  int discard_count = 0;
  struct PseudoLabel {
    std::int64_t sample_id;
    int predicted;
    bool gated;
  };
  std::vector<PseudoLabel> pseudo;  // one per strong-view entry
};

/// Weak-augments the labeled batch, feeds its raw predictions to the
/// threshold registry, fans the unlabeled batch out into K weak and k_strong
/// strong views, and freezes q_bar, q_hat and the gate of every entry.
/// Mutates the registry (labeled observations) and, in CrossEpochEma mode,
/// the per-sample EMA table.
StepPlan build_step_plan(const LabeledBatch& labeled,
                         const UnlabeledBatch& unlabeled, TrainerState& state,
                         const TrainConfig& cfg);

/// The four loss terms of a frozen plan at the given parameters.
StepLosses step_loss(const StepPlan& plan, const ModelParams& params,
                     const TrainConfig& cfg);

/// Loss terms plus the gradient of the weighted total with respect to the
/// parameters. Pseudo-label targets and gate indicators are constants.
std::pair<StepLosses, ModelParams> step_gradient(const StepPlan& plan,
                                                 const ModelParams& params,
                                                 const TrainConfig& cfg);

/// One full optimizer step: plan, gradient, finiteness check, SGD update.
/// Throws NumericalError naming the offending loss term when one goes
/// non-finite.
StepMetrics train_step(const LabeledBatch& labeled,
                       const UnlabeledBatch& unlabeled, TrainerState& state,
                       const TrainConfig& cfg);

struct EpochMetrics {
  int epoch = 0;
  Real loss_x = 0.0;
  Real loss_u1 = 0.0;
  Real loss_u2 = 0.0;
  Real loss_s = 0.0;
  Real loss_total = 0.0;
  long high_count = 0;
  long mid_count = 0;
  long discard_count = 0;
  Real mined_ratio = 0.0;       // mid_count / total strong-view entries
  Real pseudo_precision = 0.0;  // correct gated pseudo labels / gated
  Real val_accuracy = 0.0;
  Vector thresholds;  // per-class T_c at epoch end

  bool operator==(const EpochMetrics& other) const;
};

/// Runs begin_epoch, iterations_per_epoch training steps over deterministic
/// shuffled batches, end_epoch, then validation. unlabeled_truth, when given,
/// is index-aligned with unlabeled.samples and feeds only the
/// pseudo-precision metric.
EpochMetrics train_epoch(const LabeledSet& labeled,
                         const UnlabeledSet& unlabeled,
                         const LabeledSet& validation,
                         const std::vector<int>* unlabeled_truth,
                         TrainerState& state, const TrainConfig& cfg,
                         int epoch);

struct EvalResult {
  Real accuracy = 0.0;
  Vector per_class;            // accuracy of each class
  std::vector<long> class_counts;
};

EvalResult evaluate(const ModelParams& params, const LabeledSet& dataset);

/// Builds model, optimizer, threshold registry and augmentation policies for
/// the given splits.
TrainerState init_trainer(const LabeledSet& labeled,
                          const UnlabeledSet& unlabeled,
                          const TrainConfig& cfg);

struct RunResult {
  std::vector<EpochMetrics> epochs;
  TrainerState state;
};

/// init_trainer plus the full epoch loop.
RunResult run_training(const SplitResult& splits, const TrainConfig& cfg);

}  // namespace adt
