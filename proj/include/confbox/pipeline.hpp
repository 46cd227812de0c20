#pragma once

#include <optional>
#include <string>
#include <vector>

#include "confbox/box_intervals.hpp"
#include "confbox/label_sets.hpp"
#include "confbox/types.hpp"

namespace confbox::pipeline {

// How per-coordinate miscoverage is shared out when a box is judged on all
// coordinates jointly.
enum class Correction {
  Bonferroni,  // each coordinate calibrated at alpha_box / m
  MaxRank,     // joint rank threshold over the coordinate score columns
  MaxScore,    // single quantile of the per-sample max score
};

std::string to_string(Correction c);
Correction correction_from_string(const std::string& name);

// The correction a method uses unless the caller picks one explicitly.
Correction default_correction(box_intervals::BoxMethod method);

// Throws std::invalid_argument when the pair is not calibratable: max-score
// only fits the methods that fold coordinates into one score, and the
// pre-folded methods cannot be re-corrected by rank.
void validate_combination(box_intervals::BoxMethod method, Correction c);

// Joint guarantee of running the label step at alpha_label and the box step
// at alpha_box on the same calibration split: (1 - aL) * (1 - aB).
double sequential_guarantee(const MiscoverageConfig& config);

struct CalibrationModel {
  MiscoverageConfig config;
  label_sets::LabelMethod label_method = label_sets::LabelMethod::ClassThr;
  box_intervals::BoxMethod box_method = box_intervals::BoxMethod::Std;
  Correction correction = Correction::MaxRank;
  int num_classes = 0;
  int num_coords = 0;
  // Classes with fewer calibration samples than this get +inf quantiles
  // instead of meaninglessly tight ones.
  int min_class_count = 2;
  label_sets::LabelQuantiles label_quantiles;
  Matrix box_quantiles;          // num_classes x num_coords
  Eigen::VectorXi class_counts;  // calibration samples per class
};

// Calibrates both steps on the same matched set, partitioned by true label.
CalibrationModel calibrate(const std::vector<MatchedSample>& calibration,
                           const MiscoverageConfig& config,
                           box_intervals::BoxMethod method,
                           Correction correction,
                           label_sets::LabelMethod label_method,
                           int min_class_count = 2);

struct TwoStepOutput {
  label_sets::LabelSet label_set;
  Vector selected_quantiles;
  box_intervals::BoxInterval interval;
  int predicted_label = 0;
  std::optional<bool> label_covered;
  std::optional<bool> box_covered;
  std::optional<bool> joint_covered;
};

// Coordinate-wise max of the class quantile rows named by the label set.
Vector select_quantiles(const label_sets::LabelSet& set,
                        const Matrix& box_quantiles);

// Runs the label step then widens the box step over the surviving classes.
// `truth` is optional; when present the coverage flags are filled in and the
// oracle label method becomes available.
TwoStepOutput predict(const DetectionRecord& record,
                      const CalibrationModel& model,
                      const GroundTruthObject* truth = nullptr);

}  // namespace confbox::pipeline
