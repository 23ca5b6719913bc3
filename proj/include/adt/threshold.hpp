#pragma once

#include <vector>

#include "adt/prob.hpp"
#include "adt/types.hpp"

namespace adt {

/// Per-class adaptive confidence thresholds.
///
/// Each class holds two values: the live threshold T_c used for gating, and a
/// per-epoch scratch value T_c0. Within an epoch both are running minima over
/// the max-probabilities of correctly classified labeled samples of the class.
/// At epoch start the scratch resets to 0.95; at epoch end a scratch value
/// above the live one replaces it, letting thresholds rise again when the
/// model improves. Thresholds never exceed 0.95.
///
/// Mutations are single-writer; reads between mutations are safe from any
/// thread, and the registry is a plain value that can be copied across
/// threads at batch boundaries.
class ThresholdRegistry {
 public:
  static constexpr Real kInit = 0.95;

  explicit ThresholdRegistry(int num_classes);

  /// Resets every scratch threshold to 0.95. Live thresholds are untouched.
  void begin_epoch();

  /// Feeds one labeled sample's raw weak-view prediction. Only a correctly
  /// classified sample (argmax == true_class) can lower T_c and T_c0, and
  /// only when its max-probability is below the current value.
  void observe_labeled(int true_class,
                       const Eigen::Ref<const Vector>& prediction);

  /// Promotes scratch values that ended the epoch above the live threshold.
  void end_epoch();

  Real threshold_for(int c) const;

  const Vector& current() const { return t_current_; }
  const Vector& scratch() const { return t_scratch_; }
  int num_classes() const { return static_cast<int>(t_current_.size()); }

  /// Flat checkpoint form: one record per class.
  struct Record {
    int class_index;
    Real t_current;
    Real t_scratch;
  };
  std::vector<Record> to_records() const;
  static ThresholdRegistry from_records(const std::vector<Record>& records);

  bool operator==(const ThresholdRegistry& other) const = default;

 private:
  Vector t_current_;
  Vector t_scratch_;
};

}  // namespace adt
