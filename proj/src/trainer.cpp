#include "adt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include "adt/errors.hpp"

namespace adt {
namespace {

// Salts for per-view seed derivation; weak/strong/labeled draws must not
// collide even for the same (sample, step).
constexpr std::uint64_t kLabeledWeakSalt = 0xA0;
constexpr std::uint64_t kUnlabeledWeakSalt = 0xB0;
constexpr std::uint64_t kUnlabeledStrongSalt = 0xC0;
constexpr std::uint64_t kEpochShuffleSalt = 0xE0;

ProbVector class_one_hot(int c, int num_classes) {
  ProbVector v = Vector::Zero(num_classes);
  v[c] = 1.0;
  return v;
}

// Deterministic batch source: shuffled pass over the index range, reshuffled
// whenever it wraps.
class IndexCycler {
 public:
  IndexCycler(size_t n, std::uint64_t seed) : rng_(seed) {
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  int next() {
    if (pos_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::vector<int> order_;
  size_t pos_ = 0;
  std::mt19937_64 rng_;
};

struct StepEval {
  StepLosses losses;
  std::optional<ModelParams> grads;
};

// Loss values and, optionally, the gradient of the weighted total. Targets,
// gates and similarity masks come frozen from the plan; only the forward
// passes depend on params.
StepEval eval_step(const StepPlan& plan, const ModelParams& params,
                   const TrainConfig& cfg, bool with_grad) {
  StepEval out;
  if (with_grad) out.grads = zeros_like(params);

  const Real batch = static_cast<Real>(plan.labeled.size());
  for (const LabeledExample& ex : plan.labeled) {
    const ForwardTrace trace = forward_trace(params, ex.input);
    out.losses.l_x += cross_entropy(ex.label, trace.probs) / batch;
    if (with_grad) {
      Vector g = Vector::Zero(trace.probs.size());
      for (Eigen::Index c = 0; c < g.size(); ++c) {
        if (ex.label[c] != 0.0) {
          g[c] = -ex.label[c] / std::max(trace.probs[c], kProbFloor) / batch;
        }
      }
      axpy(*out.grads, backward(params, ex.input, trace, g), 1.0);
    }
  }

  const size_t n = plan.entries.size();
  if (n == 0) {
    out.losses.total = total_loss(out.losses.l_x, 0.0, 0.0, 0.0, cfg.weights);
    return out;
  }

  std::vector<ForwardTrace> traces;
  traces.reserve(n);
  for (const PlanEntry& e : plan.entries) {
    traces.push_back(forward_trace(params, e.view));
  }

  const Real entry_count = static_cast<Real>(n);
  const Real mid_norm = entry_count * plan.num_classes;
  const Real pair_count = entry_count * (entry_count - 1.0);

  std::vector<Vector> out_grads;
  if (with_grad) out_grads.assign(n, Vector());

  auto add_ce_grad = [&](size_t j, const ProbVector& target, Real weight) {
    if (!with_grad || weight == 0.0) return;
    Vector& g = out_grads[j];
    if (g.size() == 0) g = Vector::Zero(plan.num_classes);
    for (Eigen::Index c = 0; c < g.size(); ++c) {
      if (target[c] != 0.0) {
        g[c] -= weight * target[c] /
                std::max(traces[j].probs[c], kProbFloor);
      }
    }
  };

  for (size_t j = 0; j < n; ++j) {
    const PlanEntry& e = plan.entries[j];
    if (e.route == GateRoute::HighConf) {
      const ProbVector target = one_hot(e.q_hat);
      out.losses.l_u1 += cross_entropy(target, traces[j].probs) / entry_count;
      if (cfg.weights.u1 != 0.0) {
        add_ce_grad(j, target, cfg.weights.u1 / entry_count);
      }
    } else if (e.route == GateRoute::MidConf) {
      out.losses.l_u2 += l2_sq(e.q_hat, traces[j].probs) / mid_norm;
      if (with_grad && cfg.weights.u2 != 0.0) {
        Vector& g = out_grads[j];
        if (g.size() == 0) g = Vector::Zero(plan.num_classes);
        g += (cfg.weights.u2 / mid_norm) * 2.0 * (traces[j].probs - e.q_hat);
      }
    }
  }

  if (cfg.use_similar_loss && n >= 2) {
    for (size_t i = 0; i < n; ++i) {
      const PlanEntry& anchor = plan.entries[i];
      if (anchor.q_hat.maxCoeff() < cfg.tau) continue;
      const ProbVector target = one_hot(anchor.q_hat);
      for (size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (bhattacharyya(anchor.q_bar, plan.entries[j].q_bar) <=
            cfg.sim_threshold) {
          continue;
        }
        out.losses.l_s += cross_entropy(target, traces[j].probs) / pair_count;
        if (cfg.weights.s != 0.0) {
          add_ce_grad(j, target, cfg.weights.s / pair_count);
        }
      }
    }
  }

  if (with_grad) {
    for (size_t j = 0; j < n; ++j) {
      if (out_grads[j].size() == 0) continue;
      axpy(*out.grads,
           backward(params, plan.entries[j].view, traces[j], out_grads[j]),
           1.0);
    }
  }

  out.losses.total = total_loss(out.losses.l_x, out.losses.l_u1,
                                out.losses.l_u2, out.losses.l_s, cfg.weights);
  return out;
}

void check_finite_losses(const StepLosses& l) {
  const struct {
    const char* name;
    Real value;
  } terms[] = {{"loss_x", l.l_x},
               {"loss_u1", l.l_u1},
               {"loss_u2", l.l_u2},
               {"loss_s", l.l_s}};
  for (const auto& t : terms) {
    if (!std::isfinite(t.value)) {
      throw NumericalError(std::string("train_step: non-finite term ") +
                           t.name);
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const char* what) { throw InvalidParameterError(what); };
  if (!(tau > 0.0 && tau <= 1.0)) fail("tau must be in (0,1]");
  if (!(sim_threshold > 0.0 && sim_threshold <= 1.0)) fail("sim_threshold must be in (0,1]");
  if (!(temperature > 0.0 && temperature <= 1.0)) fail("temperature must be in (0,1]");
  if (k_weak < 1) fail("k_weak must be >= 1");
  if (k_strong < 1) fail("k_strong must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
  if (iterations_per_epoch < 1) fail("iterations_per_epoch must be >= 1");
  if (!(weights.u1 >= 0.0 && weights.u2 >= 0.0 && weights.s >= 0.0)) {
    fail("loss weights must be >= 0");
  }
  if (!(base_lr > 0.0)) fail("base_lr must be positive");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0,1)");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) fail("ema_decay must be in [0,1)");
  if (!(q_bar_ema_decay >= 0.0 && q_bar_ema_decay < 1.0)) {
    fail("q_bar_ema_decay must be in [0,1)");
  }
  if (strong_ops_per_sample < 0) fail("strong_ops_per_sample must be >= 0");
  if (!(augment_magnitude >= 0.0 && augment_magnitude <= 1.0)) {
    fail("augment_magnitude must be in [0,1]");
  }
}

StepPlan build_step_plan(const LabeledBatch& labeled,
                         const UnlabeledBatch& unlabeled, TrainerState& state,
                         const TrainConfig& cfg) {
  if (labeled.inputs.empty()) {
    throw InvalidParameterError("build_step_plan: empty labeled batch");
  }
  const std::uint64_t step = static_cast<std::uint64_t>(state.opt.step_count);
  StepPlan plan;
  plan.num_classes = state.num_classes;

  for (size_t i = 0; i < labeled.inputs.size(); ++i) {
    const Sample& x = labeled.inputs[i];
    Sample view = weak_augment(
        x, seed_mix({cfg.seed, step, static_cast<std::uint64_t>(x.id),
                     kLabeledWeakSalt}),
        state.weak_policy);
    plan.labeled.push_back(
        {std::move(view), class_one_hot(labeled.labels[i], plan.num_classes)});
  }

  // Raw weak-view predictions of the live model feed the threshold registry.
  if (cfg.use_adaptive_threshold) {
    for (size_t i = 0; i < plan.labeled.size(); ++i) {
      state.reg.observe_labeled(labeled.labels[i],
                                forward(state.params, plan.labeled[i].input));
    }
  }

  for (const Sample& u : unlabeled.inputs) {
    std::vector<ProbVector> weak_preds;
    weak_preds.reserve(cfg.k_weak);
    for (int k = 0; k < cfg.k_weak; ++k) {
      const Sample view = weak_augment(
          u, seed_mix({cfg.seed, step, static_cast<std::uint64_t>(u.id),
                       kUnlabeledWeakSalt + static_cast<std::uint64_t>(k)}),
          state.weak_policy);
      weak_preds.push_back(forward(state.params, view));
    }
    ProbVector q_bar = mean_prediction(weak_preds);
    if (cfg.q_bar_mode == QBarMode::CrossEpochEma) {
      auto it = state.q_bar_ema.find(u.id);
      if (it == state.q_bar_ema.end()) {
        state.q_bar_ema.emplace(u.id, q_bar);
      } else {
        it->second = ema_update(it->second, q_bar, cfg.q_bar_ema_decay);
        q_bar = it->second;
      }
    }
    const ProbVector q_hat = sharpen(q_bar, cfg.temperature);
    GateDecision decision = gate(q_bar, q_hat, cfg.tau, state.reg);
    if (!cfg.use_adaptive_threshold &&
        decision.route == GateRoute::MidConf) {
      decision.route = GateRoute::Discarded;
    }
    for (int k = 0; k < cfg.k_strong; ++k) {
      PlanEntry entry;
      entry.view = strong_augment(
          u, seed_mix({cfg.seed, step, static_cast<std::uint64_t>(u.id),
                       kUnlabeledStrongSalt + static_cast<std::uint64_t>(k)}),
          state.strong_policy);
      entry.q_bar = q_bar;
      entry.q_hat = q_hat;
      entry.route = decision.route;
      entry.sample_id = u.id;
      plan.entries.push_back(std::move(entry));
    }
  }
  return plan;
}

StepLosses step_loss(const StepPlan& plan, const ModelParams& params,
                     const TrainConfig& cfg) {
  return eval_step(plan, params, cfg, false).losses;
}

std::pair<StepLosses, ModelParams> step_gradient(const StepPlan& plan,
                                                 const ModelParams& params,
                                                 const TrainConfig& cfg) {
  StepEval eval = eval_step(plan, params, cfg, true);
  return {eval.losses, std::move(*eval.grads)};
}

StepMetrics train_step(const LabeledBatch& labeled,
                       const UnlabeledBatch& unlabeled, TrainerState& state,
                       const TrainConfig& cfg) {
  const StepPlan plan = build_step_plan(labeled, unlabeled, state, cfg);
  auto [losses, grads] = step_gradient(plan, state.params, cfg);
  check_finite_losses(losses);
  sgd_step(state.params, grads, state.opt);

  StepMetrics metrics;
  metrics.losses = losses;
  metrics.pseudo.reserve(plan.entries.size());
  for (const PlanEntry& e : plan.entries) {
    switch (e.route) {
      case GateRoute::HighConf: ++metrics.high_count; break;
      case GateRoute::MidConf: ++metrics.mid_count; break;
      case GateRoute::Discarded: ++metrics.discard_count; break;
    }
    metrics.pseudo.push_back(
        {e.sample_id, static_cast<int>(argmax_lowest(e.q_hat)),
         e.route != GateRoute::Discarded});
  }
  return metrics;
}

bool EpochMetrics::operator==(const EpochMetrics& other) const {
  return epoch == other.epoch && loss_x == other.loss_x &&
         loss_u1 == other.loss_u1 && loss_u2 == other.loss_u2 &&
         loss_s == other.loss_s && loss_total == other.loss_total &&
         high_count == other.high_count && mid_count == other.mid_count &&
         discard_count == other.discard_count &&
         mined_ratio == other.mined_ratio &&
         pseudo_precision == other.pseudo_precision &&
         val_accuracy == other.val_accuracy &&
         thresholds.size() == other.thresholds.size() &&
         (thresholds.array() == other.thresholds.array()).all();
}

EpochMetrics train_epoch(const LabeledSet& labeled,
                         const UnlabeledSet& unlabeled,
                         const LabeledSet& validation,
                         const std::vector<int>* unlabeled_truth,
                         TrainerState& state, const TrainConfig& cfg,
                         int epoch) {
  if (labeled.samples.empty()) {
    throw InvalidParameterError("train_epoch: empty labeled set");
  }
  state.reg.begin_epoch();

  IndexCycler labeled_cycle(
      labeled.samples.size(),
      seed_mix({cfg.seed, kEpochShuffleSalt, static_cast<std::uint64_t>(epoch), 1}));
  IndexCycler unlabeled_cycle(
      std::max<size_t>(unlabeled.samples.size(), 1),
      seed_mix({cfg.seed, kEpochShuffleSalt, static_cast<std::uint64_t>(epoch), 2}));

  std::unordered_map<std::int64_t, int> truth;
  if (unlabeled_truth) {
    for (size_t i = 0; i < unlabeled.samples.size(); ++i) {
      truth.emplace(unlabeled.samples[i].id, (*unlabeled_truth)[i]);
    }
  }

  EpochMetrics em;
  em.epoch = epoch;
  long gated = 0;
  long gated_correct = 0;
  for (int it = 0; it < cfg.iterations_per_epoch; ++it) {
    LabeledBatch lb;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const int idx = labeled_cycle.next();
      lb.inputs.push_back(labeled.samples[static_cast<size_t>(idx)]);
      lb.labels.push_back(labeled.labels[static_cast<size_t>(idx)]);
    }
    UnlabeledBatch ub;
    if (!unlabeled.samples.empty()) {
      for (int b = 0; b < cfg.batch_size; ++b) {
        ub.inputs.push_back(
            unlabeled.samples[static_cast<size_t>(unlabeled_cycle.next())]);
      }
    }
    const StepMetrics sm = train_step(lb, ub, state, cfg);
    em.loss_x += sm.losses.l_x;
    em.loss_u1 += sm.losses.l_u1;
    em.loss_u2 += sm.losses.l_u2;
    em.loss_s += sm.losses.l_s;
    em.loss_total += sm.losses.total;
    em.high_count += sm.high_count;
    em.mid_count += sm.mid_count;
    em.discard_count += sm.discard_count;
    for (const StepMetrics::PseudoLabel& p : sm.pseudo) {
      if (!p.gated) continue;
      ++gated;
      auto it_truth = truth.find(p.sample_id);
      if (it_truth != truth.end() && it_truth->second == p.predicted) {
        ++gated_correct;
      }
    }
  }
  state.reg.end_epoch();

  const Real steps = static_cast<Real>(cfg.iterations_per_epoch);
  em.loss_x /= steps;
  em.loss_u1 /= steps;
  em.loss_u2 /= steps;
  em.loss_s /= steps;
  em.loss_total /= steps;
  const long entries = em.high_count + em.mid_count + em.discard_count;
  em.mined_ratio =
      entries == 0 ? 0.0 : static_cast<Real>(em.mid_count) / entries;
  em.pseudo_precision =
      gated == 0 ? 0.0 : static_cast<Real>(gated_correct) / gated;
  if (!validation.samples.empty()) {
    const ModelParams& eval_params =
        cfg.eval_with_ema ? state.opt.ema_params : state.params;
    em.val_accuracy = evaluate(eval_params, validation).accuracy;
  }
  em.thresholds = state.reg.current();
  return em;
}

EvalResult evaluate(const ModelParams& params, const LabeledSet& dataset) {
  if (dataset.samples.empty()) {
    throw InvalidParameterError("evaluate: empty dataset");
  }
  EvalResult out;
  out.per_class = Vector::Zero(dataset.num_classes);
  out.class_counts.assign(static_cast<size_t>(dataset.num_classes), 0);
  Vector correct = Vector::Zero(dataset.num_classes);
  long total_correct = 0;
  for (size_t i = 0; i < dataset.samples.size(); ++i) {
    const int truth = dataset.labels[i];
    const int predicted =
        static_cast<int>(argmax_lowest(forward(params, dataset.samples[i])));
    ++out.class_counts[static_cast<size_t>(truth)];
    if (predicted == truth) {
      correct[truth] += 1.0;
      ++total_correct;
    }
  }
  for (int c = 0; c < dataset.num_classes; ++c) {
    const long n = out.class_counts[static_cast<size_t>(c)];
    out.per_class[c] = n == 0 ? 0.0 : correct[c] / static_cast<Real>(n);
  }
  out.accuracy =
      static_cast<Real>(total_correct) / static_cast<Real>(dataset.samples.size());
  return out;
}

TrainerState init_trainer(const LabeledSet& labeled,
                          const UnlabeledSet& unlabeled,
                          const TrainConfig& cfg) {
  cfg.validate();
  if (labeled.samples.empty()) {
    throw InvalidParameterError("init_trainer: empty labeled set");
  }
  const Sample& exemplar = labeled.samples.front();

  ModelParams params;
  if (cfg.model.use_conv && exemplar.kind == SampleKind::Image) {
    params = make_conv_mlp(exemplar.height, exemplar.width, exemplar.channels,
                           cfg.model.conv_filters, cfg.model.conv_kernel,
                           cfg.model.hidden, labeled.num_classes, cfg.seed);
  } else {
    params = make_mlp(static_cast<int>(exemplar.dim()), cfg.model.hidden,
                      labeled.num_classes, cfg.seed);
  }

  TrainerState state{
      std::move(params),
      OptimState{},
      ThresholdRegistry(labeled.num_classes),
      {},
      AugmentPolicy{},
      AugmentPolicy{},
      labeled.num_classes,
  };
  state.opt = make_optim(state.params, cfg.base_lr, cfg.weight_decay,
                         cfg.momentum, cfg.ema_decay, cfg.total_steps());

  state.weak_policy.mode = AugmentMode::Weak;
  state.strong_policy.mode = AugmentMode::Strong;
  state.strong_policy.strong_ops_per_sample = cfg.strong_ops_per_sample;
  state.strong_policy.magnitude = cfg.augment_magnitude;
  if (exemplar.kind == SampleKind::Feature) {
    std::vector<Sample> all = labeled.samples;
    all.insert(all.end(), unlabeled.samples.begin(), unlabeled.samples.end());
    const auto [lo, hi] = value_range(all);
    state.weak_policy.clip_lo = lo;
    state.weak_policy.clip_hi = hi;
  }
  return state;
}

RunResult run_training(const SplitResult& splits, const TrainConfig& cfg) {
  RunResult run{{}, init_trainer(splits.labeled, splits.unlabeled, cfg)};
  run.epochs.reserve(static_cast<size_t>(cfg.epochs));
  for (int e = 0; e < cfg.epochs; ++e) {
    run.epochs.push_back(train_epoch(splits.labeled, splits.unlabeled,
                                     splits.validation,
                                     &splits.unlabeled_eval_labels, run.state,
                                     cfg, e));
  }
  return run;
}

}  // namespace adt
