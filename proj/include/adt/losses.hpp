#pragma once

#include <functional>
#include <vector>

#include "adt/prob.hpp"
#include "adt/sample.hpp"
#include "adt/threshold.hpp"
#include "adt/types.hpp"

namespace adt {

using EvalFn = std::function<ProbVector(const Sample&)>;

/// Where the dual-threshold gate routes one unlabeled view:
///   HighConf  - sharpened confidence reaches the fixed threshold tau,
///   MidConf   - below tau but the raw averaged prediction clears the
///               class-adaptive threshold of its argmax class,
///   Discarded - neither.
/// The three routes are mutually exclusive and exhaustive; equality with tau
/// resolves to HighConf so boundary samples are never dropped.
enum class GateRoute { HighConf, MidConf, Discarded };

struct GateDecision {
  GateRoute route = GateRoute::Discarded;
  ProbVector anchor;  // q_hat, set for HighConf and MidConf
};

GateDecision gate(const Eigen::Ref<const Vector>& q_bar,
                  const Eigen::Ref<const Vector>& q_hat, Real tau,
                  const ThresholdRegistry& reg);

struct LossWeights {
  Real u1 = 3.0;
  Real u2 = 225.0;
  Real s = 16.0;
};

struct LabeledExample {
  Sample input;
  ProbVector label;  // one-hot
};

/// One unlabeled sample as the unsupervised losses see it: the averaged weak
/// prediction, its sharpened form, and the model's output on every strong view.
struct UnlabeledRecord {
  ProbVector q_bar;
  ProbVector q_hat;
  std::vector<ProbVector> strong_preds;
};

/// One (strong view, q_bar, q_hat) element of the similar-loss pair set.
struct SimilarTuple {
  Sample view;
  ProbVector q_bar;
  ProbVector q_hat;
};

/// -sum_c target_c log(pred_c), entries floored at kProbFloor before the log.
Real cross_entropy(const Eigen::Ref<const Vector>& target,
                   const Eigen::Ref<const Vector>& pred);

/// Squared Euclidean distance.
Real l2_sq(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

/// Mean cross-entropy of the model over a labeled batch.
Real supervised_loss(const std::vector<LabeledExample>& batch,
                     const EvalFn& model_eval);

/// Mean over all strong-view entries of the tau-gated cross-entropy against
/// the one-hot sharpened pseudo label. The mean runs over every entry, gated
/// or not.
Real unsup_loss_high(const std::vector<UnlabeledRecord>& records, Real tau);

/// Mean over all strong-view entries, additionally divided by the class
/// count, of the dual-gated squared distance between q_hat and the strong
/// prediction. The mid gate tests the un-sharpened q_bar against the adaptive
/// threshold of its argmax class.
Real unsup_loss_mid(const std::vector<UnlabeledRecord>& records, Real tau,
                    const ThresholdRegistry& reg, int num_classes);

/// Pairwise label propagation over ordered pairs (i, j), i != j: when tuple i
/// is a confident anchor and Bhattacharyya(q_bar_i, q_bar_j) exceeds
/// sim_threshold, the anchor's one-hot pseudo label is applied to the model's
/// prediction on tuple j's strong view. Normalized by the ordered-pair count;
/// fewer than two tuples yield 0.
Real similar_loss(const std::vector<SimilarTuple>& tuples, Real tau,
                  Real sim_threshold, const EvalFn& model_eval);

/// similar_loss with the partner predictions already computed (preds[j] is
/// the model output on tuple j's strong view).
Real similar_loss_preds(const std::vector<ProbVector>& q_bar,
                        const std::vector<ProbVector>& q_hat,
                        const std::vector<ProbVector>& preds, Real tau,
                        Real sim_threshold);

/// l_x + u1*l_u1 + u2*l_u2 + s*l_s. Non-finite terms throw NumericalError.
Real total_loss(Real l_x, Real l_u1, Real l_u2, Real l_s,
                const LossWeights& w);

}  // namespace adt
