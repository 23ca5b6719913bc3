#include "adt/threshold.hpp"

#include <string>

#include "adt/errors.hpp"

namespace adt {

ThresholdRegistry::ThresholdRegistry(int num_classes) {
  if (num_classes < 2) {
    throw InvalidParameterError("ThresholdRegistry: need at least 2 classes");
  }
  t_current_ = Vector::Constant(num_classes, kInit);
  t_scratch_ = Vector::Constant(num_classes, kInit);
}

void ThresholdRegistry::begin_epoch() { t_scratch_.setConstant(kInit); }

void ThresholdRegistry::observe_labeled(
    int true_class, const Eigen::Ref<const Vector>& prediction) {
  if (true_class < 0 || true_class >= num_classes()) {
    throw InvalidParameterError("observe_labeled: class index out of range");
  }
  require_valid_prob(prediction, "observe_labeled");
  if (prediction.size() != t_current_.size()) {
    throw DimensionError("observe_labeled: prediction length != class count");
  }
  const Eigen::Index predicted = argmax_lowest(prediction);
  if (predicted != true_class) return;  // misclassified samples change nothing
  const Real confidence = prediction[predicted];
  if (confidence < t_current_[true_class]) t_current_[true_class] = confidence;
  if (confidence < t_scratch_[true_class]) t_scratch_[true_class] = confidence;
}

void ThresholdRegistry::end_epoch() {
  for (Eigen::Index c = 0; c < t_current_.size(); ++c) {
    if (t_scratch_[c] > t_current_[c]) t_current_[c] = t_scratch_[c];
  }
}

Real ThresholdRegistry::threshold_for(int c) const {
  if (c < 0 || c >= num_classes()) {
    throw InvalidParameterError("threshold_for: class index out of range");
  }
  return t_current_[c];
}

std::vector<ThresholdRegistry::Record> ThresholdRegistry::to_records() const {
  std::vector<Record> records;
  records.reserve(num_classes());
  for (int c = 0; c < num_classes(); ++c) {
    records.push_back({c, t_current_[c], t_scratch_[c]});
  }
  return records;
}

ThresholdRegistry ThresholdRegistry::from_records(
    const std::vector<Record>& records) {
  if (records.size() < 2) {
    throw FormatError("threshold records: need at least 2 classes");
  }
  ThresholdRegistry reg(static_cast<int>(records.size()));
  for (const Record& r : records) {
    if (r.class_index < 0 || r.class_index >= reg.num_classes()) {
      throw FormatError("threshold records: class index " +
                        std::to_string(r.class_index) + " out of range");
    }
    if (!(r.t_current > 0.0 && r.t_current <= kInit) ||
        !(r.t_scratch > 0.0 && r.t_scratch <= kInit)) {
      throw FormatError("threshold records: value out of (0, 0.95]");
    }
    reg.t_current_[r.class_index] = r.t_current;
    reg.t_scratch_[r.class_index] = r.t_scratch;
  }
  return reg;
}

}  // namespace adt
