#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "adt/data.hpp"
#include "adt/errors.hpp"
#include "adt/losses.hpp"
#include "adt/model.hpp"
#include "test_util.hpp"

using namespace adt;

namespace {

constexpr Real kPi = 3.14159265358979323846;

Sample vec(std::initializer_list<Real> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (Real x : values) v[i++] = x;
  return Sample::feature(std::move(v));
}

// Central finite difference of a scalar loss over every parameter.
template <typename LossFn>
Vector finite_diff(ModelParams params, const LossFn& loss, Real eps = 1e-5) {
  Vector flat = flatten(params);
  Vector grad(flat.size());
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    const Real saved = flat[i];
    flat[i] = saved + eps;
    assign_from_flat(params, flat);
    const Real up = loss(params);
    flat[i] = saved - eps;
    assign_from_flat(params, flat);
    const Real down = loss(params);
    flat[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  assign_from_flat(params, flat);
  return grad;
}

Real max_rel_error(const Vector& analytic, const Vector& numeric) {
  Real worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const Real scale =
        std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-4});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("forward basics") {
  ModelParams zero = make_mlp(3, {4}, 5, 1);
  for (DenseLayer& l : zero.dense) l.weight.setZero();
  const ProbVector p = forward(zero, vec({0.3, -0.2, 0.9}));
  CHECK(p.isApprox(Vector::Constant(5, 0.2), 1e-12));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelParams m = make_mlp(4, {8, 8}, 3, trial);
    const ProbVector out = forward(m, Sample::feature(Vector::Random(4)));
    CHECK(out.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.minCoeff() > 0.0);
  }

  // 2-class linear model whose weights favor class 0 on positive inputs
  ModelParams linear = make_mlp(2, {}, 2, 1);
  linear.dense[0].weight << 1.0, 1.0, -1.0, -1.0;
  linear.dense[0].bias.setZero();
  CHECK(argmax_lowest(forward(linear, vec({0.5, 1.5}))) == 0);

  CHECK_THROWS_AS(forward(linear, vec({1.0, 2.0, 3.0})), DimensionError);
}

TEST_CASE("backward zero gradient") {
  const ModelParams m = make_mlp(3, {6}, 4, 9);
  const Sample x = vec({0.1, 0.2, 0.3});
  const ForwardTrace t = forward_trace(m, x);
  const ModelParams g = backward(m, x, t, Vector::Zero(4));
  CHECK(flatten(g).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient check on random two-layer nets") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelParams m = make_mlp(3, {6}, 3, 100 + trial);
    const Sample x = Sample::feature(Vector::Random(3));
    // random linear functional of the probabilities
    const Vector direction = Vector::Random(3);
    auto loss = [&](const ModelParams& p) {
      return direction.dot(forward(p, x));
    };
    const ForwardTrace t = forward_trace(m, x);
    const Vector analytic = flatten(backward(m, x, t, direction));
    const Vector numeric = finite_diff(m, loss);
    CHECK(max_rel_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("softmax cross-entropy composite gradient is pred minus target") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelParams m = make_mlp(4, {5}, 3, 200 + trial);
    const Sample x = Sample::feature(Vector::Random(4));
    Vector y = Vector::Zero(3);
    y[trial % 3] = 1.0;
    const ForwardTrace t = forward_trace(m, x);
    Vector dprobs = Vector::Zero(3);
    for (Eigen::Index c = 0; c < 3; ++c) {
      if (y[c] != 0.0) dprobs[c] = -y[c] / std::max(t.probs[c], kProbFloor);
    }
    const ModelParams g = backward(m, x, t, dprobs);
    // at the logit layer the composite reduces to probs - y
    CHECK(g.dense.back().bias.isApprox(t.probs - y, 1e-9));

    auto loss = [&](const ModelParams& p) {
      return cross_entropy(y, forward(p, x));
    };
    CHECK(max_rel_error(flatten(g), finite_diff(m, loss)) < 1e-4);
  }
}

TEST_CASE("gradient check through the conv front end") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 3; ++trial) {
    const ModelParams m = make_conv_mlp(5, 5, 1, 2, 3, {4}, 2, 300 + trial);
    Vector pixels = (Vector::Random(25).array() + 1.0) / 2.0;
    const Sample x = Sample::image(pixels, 5, 5, 1);
    Vector y = Vector::Zero(2);
    y[trial % 2] = 1.0;
    auto loss = [&](const ModelParams& p) {
      return cross_entropy(y, forward(p, x));
    };
    const ForwardTrace t = forward_trace(m, x);
    Vector dprobs = Vector::Zero(2);
    for (Eigen::Index c = 0; c < 2; ++c) {
      if (y[c] != 0.0) dprobs[c] = -y[c] / std::max(t.probs[c], kProbFloor);
    }
    const Vector analytic = flatten(backward(m, x, t, dprobs));
    CHECK(max_rel_error(analytic, finite_diff(m, loss)) < 1e-4);
  }
  // conv models reject feature inputs
  const ModelParams m = make_conv_mlp(5, 5, 1, 2, 3, {4}, 2, 1);
  CHECK_THROWS_AS(forward(m, vec({1.0, 2.0})), DimensionError);
}

TEST_CASE("cosine schedule endpoints and midpoint") {
  ModelParams m = make_mlp(2, {}, 2, 1);
  OptimState opt = make_optim(m, 0.03, 0.0, 0.0, 0.999, 1000);
  CHECK(cosine_lr(opt) == doctest::Approx(0.03).epsilon(1e-12));
  opt.step_count = 1000;
  CHECK(cosine_lr(opt) ==
        doctest::Approx(0.03 * std::cos(7.0 * kPi / 16.0)).epsilon(1e-12));
  opt.step_count = 500;
  CHECK(cosine_lr(opt) ==
        doctest::Approx(0.03 * std::cos(7.0 * kPi / 32.0)).epsilon(1e-12));
}

TEST_CASE("sgd single-step arithmetic") {
  // one scalar weight, no momentum, no decay: w -> w - lr * g
  ModelParams m = make_mlp(1, {}, 2, 1);
  m.dense[0].weight << 1.0, 0.0;
  m.dense[0].bias.setZero();
  OptimState opt = make_optim(m, 0.1, 0.0, 0.0, 0.999, 100);
  ModelParams g = zeros_like(m);
  g.dense[0].weight(0, 0) = 1.0;
  sgd_step(m, g, opt);
  CHECK(m.dense[0].weight(0, 0) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(opt.step_count == 1);

  // zero gradient and zero decay leave parameters untouched
  ModelParams m2 = make_mlp(3, {4}, 2, 5);
  const Vector before = flatten(m2);
  OptimState opt2 = make_optim(m2, 0.03, 0.0, 0.9, 0.999, 100);
  sgd_step(m2, zeros_like(m2), opt2);
  CHECK(flatten(m2) == before);
  CHECK(opt2.step_count == 1);
  // ema at the fixed point stays put
  CHECK(flatten(opt2.ema_params) == before);

  ModelParams bad = zeros_like(m2);
  bad.dense[0].weight(0, 0) = std::numeric_limits<Real>::quiet_NaN();
  CHECK_THROWS_AS(sgd_step(m2, bad, opt2), NumericalError);
  CHECK(flatten(m2) == before);  // params unchanged on failure
}

TEST_CASE("predict_ema equals forward right after init") {
  const ModelParams m = make_mlp(3, {5}, 2, 8);
  const OptimState opt = make_optim(m, 0.03, 0.0005, 0.9, 0.999, 10);
  const Sample x = Sample::feature(Vector::Random(3));
  CHECK(predict_ema(opt, x) == forward(m, x));
}

TEST_CASE("supervised descent halves the loss on separable blobs") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Dataset ds = gen_blobs(2, 40, 2, 6.0, seed);
    ModelParams m = make_mlp(2, {16}, 2, seed);
    OptimState opt = make_optim(m, 0.01, 0.0005, 0.0, 0.999, 200);
    auto batch_loss = [&](const ModelParams& p) {
      Real total = 0.0;
      for (size_t i = 0; i < ds.samples.size(); ++i) {
        Vector y = Vector::Zero(2);
        y[ds.labels[i]] = 1.0;
        total += cross_entropy(y, forward(p, ds.samples[i]));
      }
      return total / static_cast<Real>(ds.samples.size());
    };
    const Real initial = batch_loss(m);
    for (int step = 0; step < 200; ++step) {
      ModelParams grads = zeros_like(m);
      for (size_t i = 0; i < ds.samples.size(); ++i) {
        Vector y = Vector::Zero(2);
        y[ds.labels[i]] = 1.0;
        const ForwardTrace t = forward_trace(m, ds.samples[i]);
        Vector dprobs = Vector::Zero(2);
        for (Eigen::Index c = 0; c < 2; ++c) {
          if (y[c] != 0.0) {
            dprobs[c] = -y[c] / std::max(t.probs[c], kProbFloor) /
                        static_cast<Real>(ds.samples.size());
          }
        }
        axpy(grads, backward(m, ds.samples[i], t, dprobs), 1.0);
      }
      sgd_step(m, grads, opt);
    }
    CHECK(batch_loss(m) < 0.5 * initial);
  }
}

TEST_CASE("training is bitwise deterministic per seed") {
  auto run = [](std::uint64_t seed) {
    const Dataset ds = gen_blobs(2, 20, 2, 4.0, 3);
    ModelParams m = make_mlp(2, {8}, 2, seed);
    OptimState opt = make_optim(m, 0.03, 0.0005, 0.9, 0.999, 50);
    for (int step = 0; step < 50; ++step) {
      ModelParams grads = zeros_like(m);
      for (size_t i = 0; i < ds.samples.size(); ++i) {
        Vector y = Vector::Zero(2);
        y[ds.labels[i]] = 1.0;
        const ForwardTrace t = forward_trace(m, ds.samples[i]);
        Vector dprobs = Vector::Zero(2);
        for (Eigen::Index c = 0; c < 2; ++c) {
          if (y[c] != 0.0) dprobs[c] = -y[c] / std::max(t.probs[c], kProbFloor);
        }
        axpy(grads, backward(m, ds.samples[i], t, dprobs),
             1.0 / static_cast<Real>(ds.samples.size()));
      }
      sgd_step(m, grads, opt);
    }
    return flatten(m);
  };
  CHECK(run(11) == run(11));
  CHECK(run(11) != run(12));
}
