#pragma once

#include <Eigen/Core>

namespace adt {

/// Scalar used for all numerics. Training and tests assume double precision;
/// the tolerances baked into the probability invariants are calibrated for it.
using Real = double;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Length-C categorical distribution: entries >= 0, sum == 1 within kProbSumTol.
using ProbVector = Eigen::VectorXd;

/// Absolute tolerance for "entries sum to 1". Absorbs float accumulation for
/// class counts up to ~1000.
inline constexpr Real kProbSumTol = 1e-6;

/// Floor applied to probabilities before log to avoid -inf.
inline constexpr Real kProbFloor = 1e-12;

}  // namespace adt
