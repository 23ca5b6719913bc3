#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adt/sample.hpp"
#include "adt/types.hpp"

namespace adt {

/// Fully labeled corpus. Generators and loaders keep every label; the split
/// operation is what hides labels from the training path.
struct Dataset {
  std::vector<Sample> samples;
  std::vector<int> labels;
  int num_classes = 0;

  size_t size() const { return samples.size(); }
};

struct SplitSpec {
  int num_labeled = 0;
  int num_validation = 0;
  bool per_class_balance = true;
  std::uint64_t seed = 0;
};

struct LabeledSet {
  std::vector<Sample> samples;
  std::vector<int> labels;
  int num_classes = 0;
};

/// Training-facing view of the unlabeled split. Deliberately label-free: the
/// training path cannot read ground truth it is not supposed to have.
struct UnlabeledSet {
  std::vector<Sample> samples;
  int num_classes = 0;
};

struct SplitResult {
  LabeledSet labeled;
  UnlabeledSet unlabeled;
  LabeledSet validation;
  /// Ground truth for the unlabeled split, index-aligned with
  /// unlabeled.samples. Evaluation-only: used to log pseudo-label precision,
  /// never visible to the trainer's update path.
  std::vector<int> unlabeled_eval_labels;
};

/// Gaussian clusters (unit sigma) around random centers with pairwise center
/// distance >= separation. Deterministic per seed; throws GenerationError when
/// no center placement satisfying the separation is found.
Dataset gen_blobs(int num_classes, int per_class_n, int dim, Real separation,
                  std::uint64_t seed);

/// Two interleaved half-circles with Gaussian noise; classes 0 (upper) and 1
/// (lower).
Dataset gen_two_moons(int n, Real noise, std::uint64_t seed);

/// IDX-format image corpus (big-endian, magic 0x803 images / 0x801 labels).
/// Pixels are scaled to [0,1].
Dataset load_idx_images(const std::string& images_path,
                        const std::string& labels_path);

/// CSV with header f0,...,fd,label and one row per sample.
Dataset load_csv_vectors(const std::string& path);
void save_csv_vectors(const Dataset& ds, const std::string& path);

/// Partition into labeled / unlabeled / validation. Validation indices are
/// drawn first, then the labeled set (floor(num_labeled/C) per class when
/// balanced); everything else is unlabeled.
SplitResult split(const Dataset& ds, const SplitSpec& spec);

/// Smallest and largest value over every sample, used to clip feature-space
/// weak augmentation.
std::pair<Real, Real> value_range(const std::vector<Sample>& samples);

}  // namespace adt
