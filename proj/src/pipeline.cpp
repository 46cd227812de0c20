#include "confbox/pipeline.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "confbox/conformal.hpp"
#include "confbox/multiple_testing.hpp"

namespace confbox::pipeline {

using box_intervals::BoxMethod;
using label_sets::LabelMethod;

std::string to_string(Correction c) {
  switch (c) {
    case Correction::Bonferroni: return "bonferroni";
    case Correction::MaxRank: return "maxrank";
    case Correction::MaxScore: return "maxscore";
  }
  throw std::invalid_argument("unknown correction");
}

Correction correction_from_string(const std::string& name) {
  if (name == "bonferroni") return Correction::Bonferroni;
  if (name == "maxrank") return Correction::MaxRank;
  if (name == "maxscore") return Correction::MaxScore;
  throw std::invalid_argument("unknown correction: " + name);
}

Correction default_correction(BoxMethod method) {
  switch (method) {
    case BoxMethod::AddBonf:
    case BoxMethod::MultBonf:
      return Correction::Bonferroni;
    case BoxMethod::AddMax:
    case BoxMethod::MultMax:
      return Correction::MaxScore;
    default:
      return Correction::MaxRank;
  }
}

void validate_combination(BoxMethod method, Correction c) {
  switch (method) {
    case BoxMethod::AddBonf:
    case BoxMethod::MultBonf:
      if (c != Correction::Bonferroni)
        throw std::invalid_argument(
            "method " + std::string(box_intervals::to_string(method)) +
            " is defined with the bonferroni correction only");
      return;
    case BoxMethod::AddMax:
    case BoxMethod::MultMax:
      if (c != Correction::MaxScore)
        throw std::invalid_argument(
            "method " + std::string(box_intervals::to_string(method)) +
            " is defined with the maxscore correction only");
      return;
    default:
      // Two-sided residual methods and the rank-corrected one-sided family
      // admit either coordinate-sharing scheme, but max-score would collapse
      // coordinates with incomparable units.
      if (c == Correction::MaxScore)
        throw std::invalid_argument(
            "maxscore correction requires a method that folds coordinates "
            "into a single score");
      return;
  }
}

double sequential_guarantee(const MiscoverageConfig& config) {
  config.validate();
  return (1.0 - config.alpha_label) * (1.0 - config.alpha_box);
}

namespace {

// One class's calibrated quantile row under the chosen correction.
Vector class_quantile_row(const Matrix& scores, double alpha, Correction c) {
  const auto m = scores.cols();
  Vector row(m);
  switch (c) {
    case Correction::Bonferroni: {
      const double a = multiple_testing::bonferroni_alpha(
          alpha, static_cast<int>(m));
      for (Eigen::Index k = 0; k < m; ++k)
        row[k] = conformal::conformal_quantile(scores.col(k), a);
      return row;
    }
    case Correction::MaxRank:
      return multiple_testing::max_rank_quantiles(scores, alpha);
    case Correction::MaxScore: {
      const Vector folded = scores.rowwise().maxCoeff();
      row.setConstant(conformal::conformal_quantile(folded, alpha));
      return row;
    }
  }
  throw std::invalid_argument("unknown correction");
}

}  // namespace

CalibrationModel calibrate(const std::vector<MatchedSample>& calibration,
                           const MiscoverageConfig& config,
                           BoxMethod method, Correction correction,
                           LabelMethod label_method, int min_class_count) {
  config.validate();
  validate_combination(method, correction);
  if (calibration.empty())
    throw DataError("calibration set is empty");
  if (min_class_count < 1)
    throw std::invalid_argument("min_class_count must be at least 1");

  const int num_classes =
      static_cast<int>(calibration.front().prediction.probs.size());
  const int num_coords =
      static_cast<int>(calibration.front().prediction.box.size());
  if (num_classes < 1) throw DataError("records carry no class probabilities");
  if (num_coords < 1) throw DataError("records carry no box coordinates");
  if (box_intervals::is_one_sided(method) && num_coords != 4)
    throw DataError("one-sided methods need 4 corner coordinates, got " +
                    std::to_string(num_coords));

  for (const auto& s : calibration) {
    if (s.prediction.probs.size() != num_classes)
      throw DataError("inconsistent probability vector length");
    if (s.prediction.box.size() != num_coords ||
        s.truth.box.size() != num_coords)
      throw DataError("inconsistent box coordinate count");
    if (s.truth.label < 1 || s.truth.label > num_classes)
      throw DataError("true label " + std::to_string(s.truth.label) +
                      " outside 1.." + std::to_string(num_classes));
  }

  CalibrationModel model;
  model.config = config;
  model.label_method = label_method;
  model.box_method = method;
  model.correction = correction;
  model.num_classes = num_classes;
  model.num_coords = num_coords;
  model.min_class_count = min_class_count;
  model.label_quantiles =
      label_sets::calibrate_labels(calibration, num_classes,
                                   config.alpha_label);

  model.class_counts = Eigen::VectorXi::Zero(num_classes);
  for (const auto& s : calibration) model.class_counts[s.truth.label - 1]++;

  model.box_quantiles = Matrix::Constant(num_classes, num_coords, kInf);
  for (int y = 1; y <= num_classes; ++y) {
    const int n = model.class_counts[y - 1];
    if (n < min_class_count) continue;  // stays +inf
    Matrix scores(n, num_coords);
    int r = 0;
    for (const auto& s : calibration) {
      if (s.truth.label != y) continue;
      scores.row(r++) =
          box_intervals::score_box(s.prediction, s.truth.box, method)
              .transpose();
    }
    model.box_quantiles.row(y - 1) =
        class_quantile_row(scores, config.alpha_box, correction).transpose();
  }
  return model;
}

Vector select_quantiles(const label_sets::LabelSet& set,
                        const Matrix& box_quantiles) {
  if (set.labels.empty())
    throw std::invalid_argument("label set is empty");
  Vector q = Vector::Constant(box_quantiles.cols(), -kInf);
  for (int y : set.labels) {
    if (y < 1 || y > box_quantiles.rows())
      throw std::invalid_argument("label outside the calibrated universe");
    q = q.cwiseMax(box_quantiles.row(y - 1).transpose());
  }
  return q;
}

TwoStepOutput predict(const DetectionRecord& record,
                      const CalibrationModel& model,
                      const GroundTruthObject* truth) {
  if (record.probs.size() != model.num_classes)
    throw DataError("record has " + std::to_string(record.probs.size()) +
                    " class probabilities, model expects " +
                    std::to_string(model.num_classes));
  if (record.box.size() != model.num_coords)
    throw DataError("record has " + std::to_string(record.box.size()) +
                    " box coordinates, model expects " +
                    std::to_string(model.num_coords));

  TwoStepOutput out;
  switch (model.label_method) {
    case LabelMethod::ClassThr:
      out.label_set =
          label_sets::predict_classthr(record.probs, model.label_quantiles);
      break;
    case LabelMethod::Top:
      out.label_set = label_sets::predict_top(record.probs);
      break;
    case LabelMethod::Naive:
      out.label_set =
          label_sets::predict_naive(record.probs, model.config.alpha_label);
      break;
    case LabelMethod::Full:
      out.label_set = label_sets::predict_full(model.num_classes);
      break;
    case LabelMethod::Oracle:
      if (truth == nullptr)
        throw std::invalid_argument(
            "oracle label sets need ground truth at prediction time");
      if (truth->label < 1 || truth->label > model.num_classes)
        throw DataError("true label outside the calibrated universe");
      out.label_set.labels = {truth->label};
      out.label_set.method = LabelMethod::Oracle;
      break;
  }

  out.selected_quantiles = select_quantiles(out.label_set, model.box_quantiles);
  out.interval = box_intervals::build_interval(record, out.selected_quantiles,
                                               model.box_method);
  out.predicted_label = label_sets::predict_top(record.probs).labels.front();

  if (truth != nullptr) {
    if (truth->box.size() != model.num_coords)
      throw DataError("truth box coordinate count mismatch");
    out.label_covered = out.label_set.contains(truth->label);
    out.box_covered = out.interval.contains(truth->box);
    out.joint_covered = *out.label_covered && *out.box_covered;
  }
  return out;
}

}  // namespace confbox::pipeline
