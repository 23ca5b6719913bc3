#include "adt/augment.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace adt {
namespace {

constexpr Real kPi = 3.14159265358979323846;

// Mirror an index into [0, n-1] with edge duplication: ...2 1 0 | 0 1 2...
int reflect_index(int i, int n) {
  if (n <= 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

Real clamp01(Real v) { return std::clamp(v, 0.0, 1.0); }

Real bilinear_reflect(const Sample& img, int c, Real sy, Real sx) {
  const int y0 = static_cast<int>(std::floor(sy));
  const int x0 = static_cast<int>(std::floor(sx));
  const Real fy = sy - y0;
  const Real fx = sx - x0;
  const int ya = reflect_index(y0, img.height);
  const int yb = reflect_index(y0 + 1, img.height);
  const int xa = reflect_index(x0, img.width);
  const int xb = reflect_index(x0 + 1, img.width);
  const Real top = (1.0 - fx) * img.at(c, ya, xa) + fx * img.at(c, ya, xb);
  const Real bot = (1.0 - fx) * img.at(c, yb, xa) + fx * img.at(c, yb, xb);
  return (1.0 - fy) * top + fy * bot;
}

// Inverse-maps every output pixel through x_src = a*x + b*y + tx (centered),
// sampling bilinearly with reflection.
Sample affine_image(const Sample& img, Real a, Real b, Real c_, Real d,
                    Real tx, Real ty) {
  Sample out = img;
  const Real cx = (img.width - 1) * 0.5;
  const Real cy = (img.height - 1) * 0.5;
  for (int ch = 0; ch < img.channels; ++ch) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const Real rx = x - cx;
        const Real ry = y - cy;
        const Real sx = a * rx + b * ry + tx + cx;
        const Real sy = c_ * rx + d * ry + ty + cy;
        out.at(ch, y, x) = clamp01(bilinear_reflect(img, ch, sy, sx));
      }
    }
  }
  return out;
}

Sample translate_integer(const Sample& img, int dx, int dy) {
  Sample out = img;
  for (int ch = 0; ch < img.channels; ++ch) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const int sx = reflect_index(x - dx, img.width);
        const int sy = reflect_index(y - dy, img.height);
        out.at(ch, y, x) = img.at(ch, sy, sx);
      }
    }
  }
  return out;
}

Sample flip_horizontal(const Sample& img) {
  Sample out = img;
  for (int ch = 0; ch < img.channels; ++ch) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        out.at(ch, y, x) = img.at(ch, y, img.width - 1 - x);
      }
    }
  }
  return out;
}

enum StrongOp {
  kInvert,
  kContrast,
  kBrightness,
  kShearX,
  kShearY,
  kTranslate,
  kRotate,
  kPosterize,
  kSolarize,
  kStrongOpCount
};

Sample apply_strong_op(const Sample& img, StrongOp op, Real magnitude,
                       std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> signed_unit(-1.0, 1.0);
  std::uniform_real_distribution<Real> unit(0.0, 1.0);
  switch (op) {
    case kInvert: {
      Sample out = img;
      out.data = (img.data.array() + magnitude * (1.0 - 2.0 * img.data.array()))
                     .cwiseMax(0.0)
                     .cwiseMin(1.0);
      return out;
    }
    case kContrast: {
      const Real factor = 1.0 + 0.8 * magnitude * signed_unit(rng);
      Sample out = img;
      out.data = (0.5 + factor * (img.data.array() - 0.5))
                     .cwiseMax(0.0)
                     .cwiseMin(1.0);
      return out;
    }
    case kBrightness: {
      const Real shift = 0.5 * magnitude * signed_unit(rng);
      Sample out = img;
      out.data = (img.data.array() + shift).cwiseMax(0.0).cwiseMin(1.0);
      return out;
    }
    case kShearX: {
      const Real s = 0.3 * magnitude * signed_unit(rng);
      return affine_image(img, 1.0, s, 0.0, 1.0, 0.0, 0.0);
    }
    case kShearY: {
      const Real s = 0.3 * magnitude * signed_unit(rng);
      return affine_image(img, 1.0, 0.0, s, 1.0, 0.0, 0.0);
    }
    case kTranslate: {
      const Real dx = 0.3 * magnitude * signed_unit(rng) * img.width;
      const Real dy = 0.3 * magnitude * signed_unit(rng) * img.height;
      // inverse map: shift source the opposite way
      return affine_image(img, 1.0, 0.0, 0.0, 1.0, -dx, -dy);
    }
    case kRotate: {
      const Real angle = (30.0 * kPi / 180.0) * magnitude * signed_unit(rng);
      const Real c = std::cos(angle);
      const Real s = std::sin(angle);
      // inverse rotation
      return affine_image(img, c, s, -s, c, 0.0, 0.0);
    }
    case kPosterize: {
      const int levels =
          std::max<int>(2, static_cast<int>(std::lround(256.0 - 252.0 * magnitude)));
      Sample out = img;
      const Real steps = static_cast<Real>(levels - 1);
      out.data = (img.data.array() * steps).round() / steps;
      return out;
    }
    case kSolarize: {
      const Real threshold = 1.0 - magnitude * unit(rng);
      Sample out = img;
      for (Eigen::Index i = 0; i < out.data.size(); ++i) {
        if (out.data[i] > threshold) out.data[i] = 1.0 - out.data[i];
      }
      return out;
    }
    default:
      return img;
  }
}

}  // namespace

std::uint64_t seed_mix(std::initializer_list<std::uint64_t> words) {
  // splitmix64 finalizer chained over the words
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  for (std::uint64_t w : words) {
    h += w + 0x9e3779b97f4a7c15ull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    h = h ^ (h >> 31);
  }
  return h;
}

Sample weak_augment(const Sample& s, std::uint64_t seed,
                    const AugmentPolicy& policy) {
  std::mt19937_64 rng(seed);
  if (s.kind == SampleKind::Image) {
    std::uniform_int_distribution<int> coin(0, 1);
    const bool flip = coin(rng) == 1;
    const int max_dx = static_cast<int>(std::lround(0.125 * s.width));
    const int max_dy = static_cast<int>(std::lround(0.125 * s.height));
    std::uniform_int_distribution<int> draw_dx(-max_dx, max_dx);
    std::uniform_int_distribution<int> draw_dy(-max_dy, max_dy);
    const int dx = draw_dx(rng);
    const int dy = draw_dy(rng);
    Sample out = flip ? flip_horizontal(s) : s;
    if (dx != 0 || dy != 0) out = translate_integer(out, dx, dy);
    return out;
  }
  std::normal_distribution<Real> noise(0.0, 0.05);
  Sample out = s;
  for (Eigen::Index i = 0; i < out.data.size(); ++i) {
    out.data[i] = std::clamp(out.data[i] + noise(rng), policy.clip_lo,
                             policy.clip_hi);
  }
  return out;
}

Sample strong_augment(const Sample& s, std::uint64_t seed,
                      const AugmentPolicy& policy) {
  std::mt19937_64 rng(seed);
  if (s.kind == SampleKind::Image) {
    std::uniform_int_distribution<int> pick(0, kStrongOpCount - 1);
    Sample out = s;
    for (int i = 0; i < policy.strong_ops_per_sample; ++i) {
      const auto op = static_cast<StrongOp>(pick(rng));
      out = apply_strong_op(out, op, policy.magnitude, rng);
    }
    return out;
  }
  std::normal_distribution<Real> noise(0.0, 0.2);
  std::uniform_real_distribution<Real> unit(0.0, 1.0);
  Sample out = s;
  for (Eigen::Index i = 0; i < out.data.size(); ++i) {
    out.data[i] += noise(rng);
  }
  for (Eigen::Index i = 0; i < out.data.size(); ++i) {
    if (unit(rng) < 0.1) out.data[i] = 0.0;
  }
  return out;
}

}  // namespace adt
