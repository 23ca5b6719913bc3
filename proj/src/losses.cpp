#include "adt/losses.hpp"

#include <cmath>

#include "adt/errors.hpp"

namespace adt {

Real cross_entropy(const Eigen::Ref<const Vector>& target,
                   const Eigen::Ref<const Vector>& pred) {
  if (target.size() != pred.size()) {
    throw DimensionError("cross_entropy: length mismatch");
  }
  Real loss = 0.0;
  for (Eigen::Index c = 0; c < target.size(); ++c) {
    if (target[c] != 0.0) {
      loss -= target[c] * std::log(std::max(pred[c], kProbFloor));
    }
  }
  return loss;
}

Real l2_sq(const Eigen::Ref<const Vector>& a,
           const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("l2_sq: length mismatch");
  }
  return (a - b).squaredNorm();
}

GateDecision gate(const Eigen::Ref<const Vector>& q_bar,
                  const Eigen::Ref<const Vector>& q_hat, Real tau,
                  const ThresholdRegistry& reg) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw InvalidParameterError("gate: tau must be in (0,1]");
  }
  require_valid_prob(q_bar, "gate");
  require_valid_prob(q_hat, "gate");
  GateDecision d;
  if (q_hat.maxCoeff() >= tau) {
    d.route = GateRoute::HighConf;
    d.anchor = q_hat;
    return d;
  }
  const Eigen::Index c = argmax_lowest(q_bar);
  if (q_bar[c] > reg.threshold_for(static_cast<int>(c))) {
    d.route = GateRoute::MidConf;
    d.anchor = q_hat;
    return d;
  }
  d.route = GateRoute::Discarded;
  return d;
}

Real supervised_loss(const std::vector<LabeledExample>& batch,
                     const EvalFn& model_eval) {
  if (batch.empty()) {
    throw InvalidParameterError("supervised_loss: empty batch");
  }
  Real total = 0.0;
  for (const LabeledExample& ex : batch) {
    total += cross_entropy(ex.label, model_eval(ex.input));
  }
  return total / static_cast<Real>(batch.size());
}

Real unsup_loss_high(const std::vector<UnlabeledRecord>& records, Real tau) {
  Eigen::Index entries = 0;
  Real total = 0.0;
  for (const UnlabeledRecord& rec : records) {
    entries += static_cast<Eigen::Index>(rec.strong_preds.size());
    if (rec.q_hat.maxCoeff() < tau) continue;
    const ProbVector target = one_hot(rec.q_hat);
    for (const ProbVector& pred : rec.strong_preds) {
      total += cross_entropy(target, pred);
    }
  }
  return entries == 0 ? 0.0 : total / static_cast<Real>(entries);
}

Real unsup_loss_mid(const std::vector<UnlabeledRecord>& records, Real tau,
                    const ThresholdRegistry& reg, int num_classes) {
  if (num_classes < 2) {
    throw InvalidParameterError("unsup_loss_mid: bad class count");
  }
  Eigen::Index entries = 0;
  Real total = 0.0;
  for (const UnlabeledRecord& rec : records) {
    entries += static_cast<Eigen::Index>(rec.strong_preds.size());
    if (rec.q_hat.maxCoeff() >= tau) continue;
    const Eigen::Index c = argmax_lowest(rec.q_bar);
    if (!(rec.q_bar[c] > reg.threshold_for(static_cast<int>(c)))) continue;
    for (const ProbVector& pred : rec.strong_preds) {
      total += l2_sq(rec.q_hat, pred);
    }
  }
  if (entries == 0) return 0.0;
  return total / (static_cast<Real>(num_classes) * static_cast<Real>(entries));
}

Real similar_loss_preds(const std::vector<ProbVector>& q_bar,
                        const std::vector<ProbVector>& q_hat,
                        const std::vector<ProbVector>& preds, Real tau,
                        Real sim_threshold) {
  const size_t n = q_bar.size();
  if (q_hat.size() != n || preds.size() != n) {
    throw DimensionError("similar_loss: tuple arrays disagree in length");
  }
  if (n < 2) return 0.0;
  Real total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (q_hat[i].maxCoeff() < tau) continue;  // anchor gate
    const ProbVector anchor = one_hot(q_hat[i]);
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (bhattacharyya(q_bar[i], q_bar[j]) <= sim_threshold) continue;
      total += cross_entropy(anchor, preds[j]);
    }
  }
  const Real pair_count = static_cast<Real>(n) * static_cast<Real>(n - 1);
  return total / pair_count;
}

Real similar_loss(const std::vector<SimilarTuple>& tuples, Real tau,
                  Real sim_threshold, const EvalFn& model_eval) {
  if (tuples.size() < 2) return 0.0;
  std::vector<ProbVector> q_bar, q_hat, preds;
  q_bar.reserve(tuples.size());
  q_hat.reserve(tuples.size());
  preds.reserve(tuples.size());
  for (const SimilarTuple& t : tuples) {
    q_bar.push_back(t.q_bar);
    q_hat.push_back(t.q_hat);
    preds.push_back(model_eval(t.view));
  }
  return similar_loss_preds(q_bar, q_hat, preds, tau, sim_threshold);
}

Real total_loss(Real l_x, Real l_u1, Real l_u2, Real l_s,
                const LossWeights& w) {
  if (!(w.u1 >= 0.0 && w.u2 >= 0.0 && w.s >= 0.0) ||
      !std::isfinite(w.u1 + w.u2 + w.s)) {
    throw InvalidParameterError("total_loss: weights must be finite and >= 0");
  }
  const Real total = l_x + w.u1 * l_u1 + w.u2 * l_u2 + w.s * l_s;
  if (!std::isfinite(total)) {
    throw NumericalError("total_loss: non-finite loss");
  }
  return total;
}

}  // namespace adt
