#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "adt/augment.hpp"
#include "test_util.hpp"

using namespace adt;

namespace {

// Smooth off-center blob, the shape of thing the weak/strong asymmetry is
// meant for. Plain white noise would make a horizontal flip as violent as any
// strong transform.
Sample blob_image(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> offset(-0.1, 0.1);
  std::uniform_real_distribution<Real> width(0.15, 0.3);
  const Real cx = (0.5 + offset(rng)) * (w - 1);
  const Real cy = (0.5 + offset(rng)) * (h - 1);
  const Real s = width(rng) * w;
  Vector pixels(h * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Real d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      pixels[y * w + x] = std::exp(-d2 / (2.0 * s * s));
    }
  }
  return Sample::image(std::move(pixels), h, w, 1);
}

int reflect(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Reference weak transform: optional flip then reflected integer translate.
Sample reference_weak(const Sample& img, bool flip, int dx, int dy) {
  Sample out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      int sx = reflect(x - dx, img.width);
      const int sy = reflect(y - dy, img.height);
      if (flip) sx = img.width - 1 - sx;
      out.at(0, y, x) = img.at(0, sy, sx);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("augmentation is deterministic in (sample, seed)") {
  std::mt19937_64 rng(5);
  const Sample img = blob_image(16, 16, rng);
  const Sample vec = Sample::feature(Vector::Random(8));
  AugmentPolicy policy;
  for (std::uint64_t seed : {1ull, 77ull, 123456789ull}) {
    CHECK(weak_augment(img, seed, policy).data ==
          weak_augment(img, seed, policy).data);
    CHECK(strong_augment(img, seed, policy).data ==
          strong_augment(img, seed, policy).data);
    CHECK(weak_augment(vec, seed, policy).data ==
          weak_augment(vec, seed, policy).data);
    CHECK(strong_augment(vec, seed, policy).data ==
          strong_augment(vec, seed, policy).data);
  }
}

TEST_CASE("weak image augmentation is a flip plus bounded translation") {
  std::mt19937_64 rng(9);
  const Sample img = blob_image(32, 32, rng);
  const int bound = 4;  // 12.5% of 32
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Sample out = weak_augment(img, seed);
    bool matched = false;
    for (int flip = 0; flip < 2 && !matched; ++flip) {
      for (int dx = -bound; dx <= bound && !matched; ++dx) {
        for (int dy = -bound; dy <= bound && !matched; ++dy) {
          if (out.data == reference_weak(img, flip == 1, dx, dy).data) {
            matched = true;
          }
        }
      }
    }
    CHECK(matched);
  }
}

TEST_CASE("some weak seed is the identity draw") {
  std::mt19937_64 rng(13);
  const Sample img = blob_image(8, 8, rng);  // max offset 1: identity is common
  bool found = false;
  for (std::uint64_t seed = 0; seed < 500 && !found; ++seed) {
    found = weak_augment(img, seed).data == img.data;
  }
  CHECK(found);
}

TEST_CASE("strong images stay in range and keep their shape") {
  std::mt19937_64 rng(21);
  AugmentPolicy policy;
  policy.strong_ops_per_sample = 2;
  policy.magnitude = 1.0;  // harshest setting
  for (int draw = 0; draw < 10000; ++draw) {
    if (draw % 500 == 0) rng.seed(static_cast<std::uint64_t>(draw) + 21);
    const Sample img = blob_image(8, 8, rng);
    const Sample out = strong_augment(img, draw, policy);
    REQUIRE(out.data.size() == img.data.size());
    CHECK(out.height == img.height);
    CHECK(out.width == img.width);
    CHECK(out.data.minCoeff() >= 0.0);
    CHECK(out.data.maxCoeff() <= 1.0);
  }
}

TEST_CASE("zero magnitude strong ops are near identity") {
  std::mt19937_64 rng(33);
  const Sample img = blob_image(12, 12, rng);
  AugmentPolicy policy;
  policy.magnitude = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Sample out = strong_augment(img, seed, policy);
    // posterize at magnitude 0 still quantizes to 1/255 steps
    CHECK((out.data - img.data).cwiseAbs().maxCoeff() <= 0.002);
  }
}

TEST_CASE("feature-space augmentation") {
  Vector base(6);
  base << 0.1, -0.4, 2.0, 0.7, -1.2, 0.0;
  const Sample vec = Sample::feature(base);

  AugmentPolicy clipped;
  clipped.clip_lo = -1.2;
  clipped.clip_hi = 2.0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Sample weak = weak_augment(vec, seed, clipped);
    REQUIRE(weak.data.size() == base.size());
    CHECK(weak.data.minCoeff() >= clipped.clip_lo);
    CHECK(weak.data.maxCoeff() <= clipped.clip_hi);
  }

  // strong zeroes roughly 10% of dimensions
  long zeroed = 0;
  const long draws = 3000;
  for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(draws); ++seed) {
    const Sample strong = strong_augment(vec, seed);
    for (Eigen::Index d = 0; d < strong.data.size(); ++d) {
      if (strong.data[d] == 0.0) ++zeroed;
    }
  }
  const Real rate = static_cast<Real>(zeroed) / (draws * base.size());
  CHECK(rate > 0.07);
  CHECK(rate < 0.13);
}

TEST_CASE("strong perturbs more than weak") {
  std::mt19937_64 rng(77);
  Real weak_sum = 0.0, strong_sum = 0.0;
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) {
    const Sample img = blob_image(16, 16, rng);
    weak_sum += (weak_augment(img, i).data - img.data).norm();
    strong_sum += (strong_augment(img, i).data - img.data).norm();
  }
  CHECK(strong_sum / draws > weak_sum / draws);

  Real weak_vec = 0.0, strong_vec = 0.0;
  for (int i = 0; i < draws; ++i) {
    Vector features = Vector::Random(10) * 2.0;
    const Sample vec = Sample::feature(features);
    weak_vec += (weak_augment(vec, i).data - vec.data).norm();
    strong_vec += (strong_augment(vec, i).data - vec.data).norm();
  }
  CHECK(strong_vec / draws > weak_vec / draws);
}
