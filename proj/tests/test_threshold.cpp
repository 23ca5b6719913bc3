#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "adt/errors.hpp"
#include "adt/threshold.hpp"
#include "test_util.hpp"

using namespace adt;

namespace {

// Prediction with a chosen argmax class and max value.
Vector pred_with(int classes, int top_class, Real top_value) {
  Vector v = Vector::Constant(classes, (1.0 - top_value) / (classes - 1));
  v[top_class] = top_value;
  return v;
}

}  // namespace

TEST_CASE("fresh registry starts at 0.95 everywhere") {
  ThresholdRegistry reg(4);
  for (int c = 0; c < 4; ++c) CHECK(reg.threshold_for(c) == 0.95);
  CHECK_THROWS_AS(reg.threshold_for(-1), InvalidParameterError);
  CHECK_THROWS_AS(reg.threshold_for(4), InvalidParameterError);
}

TEST_CASE("observe lowers the threshold only for correct predictions") {
  ThresholdRegistry reg(3);
  reg.observe_labeled(2, pred_with(3, 2, 0.62));
  CHECK(reg.threshold_for(2) == doctest::Approx(0.62));
  // higher confidence later does not raise it within the epoch
  reg.observe_labeled(2, pred_with(3, 2, 0.80));
  CHECK(reg.threshold_for(2) == doctest::Approx(0.62));
  // misclassified sample is ignored
  reg.observe_labeled(2, pred_with(3, 0, 0.90));
  CHECK(reg.threshold_for(2) == doctest::Approx(0.62));
  // other classes untouched
  CHECK(reg.threshold_for(0) == 0.95);
  CHECK(reg.threshold_for(1) == 0.95);
  CHECK_THROWS_AS(reg.observe_labeled(3, pred_with(3, 0, 0.5)),
                  InvalidParameterError);
}

TEST_CASE("begin_epoch resets scratch only") {
  ThresholdRegistry reg(2);
  reg.observe_labeled(0, pred_with(2, 0, 0.6));
  reg.observe_labeled(1, pred_with(2, 1, 0.7));
  CHECK(reg.scratch()[0] == doctest::Approx(0.6));
  reg.begin_epoch();
  CHECK(reg.scratch()[0] == 0.95);
  CHECK(reg.scratch()[1] == 0.95);
  CHECK(reg.current()[0] == doctest::Approx(0.6));
  CHECK(reg.current()[1] == doctest::Approx(0.7));
}

TEST_CASE("end_epoch promotes a larger scratch value") {
  ThresholdRegistry reg(2);
  // first epoch drags T_0 down to 0.62
  reg.begin_epoch();
  reg.observe_labeled(0, pred_with(2, 0, 0.62));
  reg.end_epoch();
  CHECK(reg.threshold_for(0) == doctest::Approx(0.62));
  // next epoch the model only produces confident correct samples
  reg.begin_epoch();
  reg.observe_labeled(0, pred_with(2, 0, 0.71));
  reg.end_epoch();
  CHECK(reg.threshold_for(0) == doctest::Approx(0.71));
  // scratch below current does not demote
  reg.begin_epoch();
  reg.observe_labeled(0, pred_with(2, 0, 0.80));
  reg.observe_labeled(0, pred_with(2, 0, 0.55));
  CHECK(reg.threshold_for(0) == doctest::Approx(0.55));
  reg.end_epoch();
  CHECK(reg.threshold_for(0) == doctest::Approx(0.55));
}

TEST_CASE("epoch with no correct observations resets to 0.95") {
  ThresholdRegistry reg(2);
  reg.begin_epoch();
  reg.observe_labeled(0, pred_with(2, 0, 0.5));
  reg.end_epoch();
  CHECK(reg.threshold_for(0) == doctest::Approx(0.5));
  reg.begin_epoch();
  reg.end_epoch();
  CHECK(reg.threshold_for(0) == 0.95);
}

TEST_CASE("property: monotone within epoch, isolated, order-insensitive, bounded") {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<int> class_count(2, 6);
  std::uniform_real_distribution<Real> conf(0.3, 0.999);
  for (int trial = 0; trial < 300; ++trial) {
    const int classes = class_count(rng);
    std::uniform_int_distribution<int> pick(0, classes - 1);
    ThresholdRegistry reg(classes);

    // warm-up epoch leaves arbitrary per-class state
    reg.begin_epoch();
    for (int i = 0; i < 10; ++i) {
      reg.observe_labeled(pick(rng), pred_with(classes, pick(rng), conf(rng)));
    }
    reg.end_epoch();

    struct Obs {
      int true_class;
      Vector pred;
    };
    std::vector<Obs> observations;
    for (int i = 0; i < 20; ++i) {
      observations.push_back(
          {pick(rng), pred_with(classes, pick(rng), conf(rng))});
    }

    reg.begin_epoch();
    ThresholdRegistry shuffled = reg;
    Vector last = reg.current();
    for (const Obs& o : observations) {
      const Vector before = reg.current();
      reg.observe_labeled(o.true_class, o.pred);
      const Vector after = reg.current();
      // monotone non-increase, and only the observed class may move
      for (int c = 0; c < classes; ++c) {
        CHECK(after[c] <= before[c]);
        if (c != o.true_class) CHECK(after[c] == before[c]);
      }
    }
    // order insensitivity: a shuffled replay reaches the same state
    std::shuffle(observations.begin(), observations.end(), rng);
    for (const Obs& o : observations) {
      shuffled.observe_labeled(o.true_class, o.pred);
    }
    CHECK(shuffled.current() == reg.current());
    CHECK(shuffled.scratch() == reg.scratch());
    reg.end_epoch();
    shuffled.end_epoch();
    CHECK(shuffled.current() == reg.current());
    CHECK((reg.current().array() <= 0.95).all());
    CHECK((reg.current().array() > 0.0).all());
  }
}

TEST_CASE("record round trip") {
  ThresholdRegistry reg(3);
  reg.observe_labeled(1, pred_with(3, 1, 0.44));
  reg.observe_labeled(2, pred_with(3, 2, 0.81));
  const auto records = reg.to_records();
  const ThresholdRegistry back = ThresholdRegistry::from_records(records);
  CHECK(back == reg);

  auto bad = records;
  bad[0].t_current = 1.5;
  CHECK_THROWS_AS(ThresholdRegistry::from_records(bad), FormatError);
}
