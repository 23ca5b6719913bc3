#include "adt/prob.hpp"

#include <cmath>

namespace adt {

bool is_valid_prob(const Eigen::Ref<const Vector>& v, Real tol) {
  if (v.size() < 2) return false;
  if ((v.array() < 0.0).any()) return false;
  return std::abs(v.sum() - 1.0) <= tol;
}

void require_valid_prob(const Eigen::Ref<const Vector>& v, const char* who) {
  if (!is_valid_prob(v)) {
    throw InvalidDistributionError(std::string(who) +
                                   ": input is not a probability distribution");
  }
}

Eigen::Index argmax_lowest(const Eigen::Ref<const Vector>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

ProbVector sharpen(const Eigen::Ref<const Vector>& p, Real temperature) {
  if (!(temperature > 0.0)) {
    throw InvalidParameterError("sharpen: temperature must be positive");
  }
  require_valid_prob(p, "sharpen");
  const Real inv_t = 1.0 / temperature;
  const Real pmax = p.maxCoeff();
  // pmax >= 1/C > 0 for a valid distribution; ratios stay in [0,1].
  Vector powered = (p.array() / pmax).pow(inv_t);
  const Real total = powered.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw InvalidDistributionError("sharpen: degenerate input");
  }
  return powered / total;
}

ProbVector one_hot(const Eigen::Ref<const Vector>& p) {
  require_valid_prob(p, "one_hot");
  ProbVector out = Vector::Zero(p.size());
  out[argmax_lowest(p)] = 1.0;
  return out;
}

Real bhattacharyya(const Eigen::Ref<const Vector>& p,
                   const Eigen::Ref<const Vector>& q) {
  if (p.size() != q.size()) {
    throw DimensionError("bhattacharyya: length mismatch");
  }
  require_valid_prob(p, "bhattacharyya");
  require_valid_prob(q, "bhattacharyya");
  const Real coeff =
      (p.array().max(0.0) * q.array().max(0.0)).sqrt().sum();
  return std::min(coeff, 1.0);
}

ProbVector mean_prediction(const std::vector<ProbVector>& preds) {
  if (preds.empty()) {
    throw InvalidParameterError("mean_prediction: empty prediction list");
  }
  Vector acc = preds.front();
  for (size_t i = 1; i < preds.size(); ++i) {
    if (preds[i].size() != acc.size()) {
      throw DimensionError("mean_prediction: length mismatch");
    }
    acc += preds[i];
  }
  return acc / static_cast<Real>(preds.size());
}

Real entropy(const Eigen::Ref<const Vector>& p) {
  Real h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

}  // namespace adt
