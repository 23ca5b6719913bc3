#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

#include "adt/sample.hpp"

namespace adt {

enum class AugmentMode { Weak, Strong };

/// Stochastic augmentation policy. Weak mode ignores the strong-op fields.
/// For feature samples the clip range bounds weak-noise outputs; it is set
/// from the dataset's observed value range and left infinite when unknown.
struct AugmentPolicy {
  AugmentMode mode = AugmentMode::Weak;
  int strong_ops_per_sample = 2;
  Real magnitude = 0.5;  // in [0,1], scales every strong transform
  Real clip_lo = -std::numeric_limits<Real>::infinity();
  Real clip_hi = std::numeric_limits<Real>::infinity();
};

/// Deterministic seed derivation: augmentation is a pure function of
/// (sample, seed), and per-view seeds are mixed from the run seed, the step,
/// the sample id and the view index.
std::uint64_t seed_mix(std::initializer_list<std::uint64_t> words);

/// Horizontal flip with probability 1/2, then an integer translation drawn
/// uniformly in +-12.5% of each spatial dimension with reflection padding.
/// Feature samples get additive Gaussian noise (sigma 0.05) clipped to the
/// policy range.
Sample weak_augment(const Sample& s, std::uint64_t seed,
                    const AugmentPolicy& policy = {});

/// Applies strong_ops_per_sample transforms drawn uniformly from a fixed
/// nine-op catalog (invert, contrast, brightness, shear-x, shear-y,
/// translate, rotate, posterize, solarize), each scaled by magnitude.
/// Feature samples get Gaussian noise (sigma 0.2) plus per-dimension zeroing
/// with probability 0.1. Image outputs stay in [0,1].
Sample strong_augment(const Sample& s, std::uint64_t seed,
                      const AugmentPolicy& policy = {});

}  // namespace adt
