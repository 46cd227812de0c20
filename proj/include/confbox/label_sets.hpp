#pragma once

#include <string>
#include <vector>

#include "confbox/types.hpp"

namespace confbox::label_sets {

enum class LabelMethod { ClassThr, Top, Naive, Full, Oracle };

const char* to_string(LabelMethod m);
LabelMethod label_method_from_string(const std::string& s);

// Per-class thresholds calibrated on the score 1 - p_y of the true class.
// q[y-1] belongs to class id y; +inf marks classes whose calibration slice is
// too small for the level (such classes are always included).
struct LabelQuantiles {
  Vector q;
  double alpha_label{0.0};

  int num_classes() const { return static_cast<int>(q.size()); }
};

// Sorted 1-based class ids.
struct LabelSet {
  std::vector<int> labels;
  LabelMethod method{LabelMethod::Full};
  bool fallback{false};  // the empty-set fallback fired

  bool contains(int label) const;
  std::size_t size() const { return labels.size(); }
};

// Partitions calibration samples by their true label and calibrates each
// class's threshold separately. alpha_label = 0 yields all +inf.
LabelQuantiles calibrate_labels(const std::vector<MatchedSample>& calibration,
                                int num_classes, double alpha_label);

// {y : p_y >= 1 - q_y}; an empty set falls back to the top class.
LabelSet predict_classthr(const Vector& probs, const LabelQuantiles& lq);

// Singleton argmax; ties resolved to the lowest class id.
LabelSet predict_top(const Vector& probs);

// Descending-probability prefix with cumulative mass >= 1 - alpha_label,
// including the label that crosses the threshold and any labels tied with it.
LabelSet predict_naive(const Vector& probs, double alpha_label);

LabelSet predict_full(int num_classes);

// softmax(log(p) / T) with probabilities floored at 1e-12. T > 0; T = 1 is
// the identity up to normalization, T < 1 sharpens, T > 1 flattens.
Vector temperature_scale(const Vector& probs, double temperature);

// Top-class expected calibration error over equal-width confidence bins.
double expected_calibration_error(const std::vector<Vector>& probs,
                                  const std::vector<int>& labels,
                                  int num_bins = 15);

}  // namespace confbox::label_sets
