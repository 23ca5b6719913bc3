#pragma once

#include <vector>

#include "adt/errors.hpp"
#include "adt/types.hpp"

namespace adt {

/// True when v is a categorical distribution: C >= 2, entries >= 0 and
/// summing to 1 within kProbSumTol.
bool is_valid_prob(const Eigen::Ref<const Vector>& v, Real tol = kProbSumTol);

/// Throws InvalidDistributionError when is_valid_prob fails.
void require_valid_prob(const Eigen::Ref<const Vector>& v, const char* who);

/// Index of the largest entry; ties break toward the lowest index.
Eigen::Index argmax_lowest(const Eigen::Ref<const Vector>& v);

/// Temperature rescaling p_c^{1/T} / sum_c p_c^{1/T}. T in (0,1] sharpens the
/// distribution toward its argmax; T = 1 is the identity. Computed relative to
/// the max entry so small temperatures do not underflow.
ProbVector sharpen(const Eigen::Ref<const Vector>& p, Real temperature);

/// Indicator vector of argmax(p), ties toward the lowest class index.
ProbVector one_hot(const Eigen::Ref<const Vector>& p);

/// Bhattacharyya coefficient sum_c sqrt(p_c * q_c). Symmetric, in [0,1],
/// equal to 1 iff p == q. Negative float noise is clamped to zero before the
/// square root so disjoint support yields exactly 0.
Real bhattacharyya(const Eigen::Ref<const Vector>& p,
                   const Eigen::Ref<const Vector>& q);

/// Elementwise arithmetic mean of a non-empty list of equal-length vectors.
ProbVector mean_prediction(const std::vector<ProbVector>& preds);

/// decay * prev + (1 - decay) * next, for any matching dense shapes.
template <typename DerivedA, typename DerivedB>
auto ema_update(const Eigen::MatrixBase<DerivedA>& prev,
                const Eigen::MatrixBase<DerivedB>& next, Real decay) {
  if (prev.rows() != next.rows() || prev.cols() != next.cols()) {
    throw DimensionError("ema_update: shape mismatch");
  }
  if (!(decay >= 0.0 && decay < 1.0)) {
    throw InvalidParameterError("ema_update: decay must be in [0,1)");
  }
  return (decay * prev + (1.0 - decay) * next).eval();
}

/// Shannon entropy -sum p log p with 0 log 0 == 0. Used by property checks.
Real entropy(const Eigen::Ref<const Vector>& p);

}  // namespace adt
