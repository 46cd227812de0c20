#include "confbox/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace confbox::metrics {

using box_intervals::BoxInterval;
using box_intervals::Sidedness;

double empirical_coverage(const std::vector<bool>& covered) {
  if (covered.empty())
    throw std::invalid_argument("coverage of an empty sample is undefined");
  std::size_t hits = 0;
  for (bool c : covered) hits += c ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(covered.size());
}

double mean_set_size(const std::vector<label_sets::LabelSet>& sets) {
  if (sets.empty())
    throw std::invalid_argument("mean size of an empty sample is undefined");
  std::size_t total = 0;
  for (const auto& s : sets) total += s.labels.size();
  return static_cast<double>(total) / static_cast<double>(sets.size());
}

namespace {

BoxInterval comparable(const BoxInterval& iv, const Vector& pred_box) {
  if (iv.sidedness == Sidedness::OneSidedOuter)
    return box_intervals::one_sided_to_two_sided(iv, pred_box);
  return iv;
}

}  // namespace

MpiwResult mpiw(const std::vector<BoxInterval>& intervals,
                const std::vector<Vector>& predicted_boxes) {
  if (intervals.size() != predicted_boxes.size())
    throw std::invalid_argument("interval and box counts differ");
  MpiwResult out;
  double total = 0.0;
  long coords = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const BoxInterval iv = comparable(intervals[i], predicted_boxes[i]);
    if (!iv.bounded()) {
      out.excluded_unbounded++;
      continue;
    }
    // Inverted bounds mean an empty interval; its width contribution is 0.
    total += (iv.hi - iv.lo).cwiseMax(0.0).sum();
    coords += iv.dims();
    out.counted++;
  }
  if (coords > 0) out.value = total / static_cast<double>(coords);
  return out;
}

StretchResult stretch(const std::vector<BoxInterval>& intervals,
                      const std::vector<Vector>& predicted_boxes) {
  if (intervals.size() != predicted_boxes.size())
    throw std::invalid_argument("interval and box counts differ");
  StretchResult out;
  double total = 0.0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const BoxInterval& iv = intervals[i];
    const Vector& pred = predicted_boxes[i];
    if (iv.dims() != 4 || pred.size() != 4) {
      out.excluded++;
      continue;
    }
    // Outermost box consistent with the interval, shared by both sidedness
    // conventions: lowest corner bounds below, highest corner bounds above.
    const double w = iv.hi[2] - iv.lo[0];
    const double h = iv.hi[3] - iv.lo[1];
    const double pw = pred[2] - pred[0];
    const double ph = pred[3] - pred[1];
    if (!std::isfinite(w) || !std::isfinite(h) || w <= 0.0 || h <= 0.0 ||
        pw <= 0.0 || ph <= 0.0) {
      out.excluded++;
      continue;
    }
    total += std::sqrt((w * h) / (pw * ph));
    out.counted++;
  }
  if (out.counted > 0) out.value = total / out.counted;
  return out;
}

double pinball_loss(double value, double quantile, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("pinball level must be inside (0, 1)");
  const double d = value - quantile;
  return d >= 0.0 ? tau * d : (tau - 1.0) * d;
}

double mean_pinball(const Vector& values, const Vector& quantiles, double tau) {
  if (values.size() != quantiles.size())
    throw std::invalid_argument("value and quantile counts differ");
  if (values.size() == 0)
    throw std::invalid_argument("mean pinball of an empty sample is undefined");
  double total = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    total += pinball_loss(values[i], quantiles[i], tau);
  return total / static_cast<double>(values.size());
}

namespace {

struct CellAccumulator {
  std::vector<bool> label_cov, box_cov, joint_cov;
  std::vector<label_sets::LabelSet> sets;
  std::vector<BoxInterval> intervals;
  std::vector<Vector> pred_boxes;

  void add(const EvaluatedSample& es) {
    label_cov.push_back(*es.output.label_covered);
    box_cov.push_back(*es.output.box_covered);
    joint_cov.push_back(*es.output.joint_covered);
    sets.push_back(es.output.label_set);
    intervals.push_back(es.output.interval);
    pred_boxes.push_back(es.sample.prediction.box);
  }

  ReportCell finalize() const {
    ReportCell cell;
    cell.count = static_cast<int>(label_cov.size());
    if (cell.count == 0) return cell;
    cell.label_coverage = empirical_coverage(label_cov);
    cell.box_coverage = empirical_coverage(box_cov);
    cell.joint_coverage = empirical_coverage(joint_cov);
    cell.mean_set_size = mean_set_size(sets);
    const auto w = mpiw(intervals, pred_boxes);
    cell.mpiw = w.value;
    cell.mpiw_excluded = w.excluded_unbounded;
    cell.stretch = stretch(intervals, pred_boxes).value;
    return cell;
  }
};

}  // namespace

EvaluationReport stratified_report(const std::vector<EvaluatedSample>& samples) {
  if (samples.empty())
    throw std::invalid_argument("cannot report on an empty evaluation");
  CellAccumulator overall;
  std::map<int, CellAccumulator> by_class;
  std::map<geometry::SizeStratum, CellAccumulator> by_stratum;
  std::map<bool, CellAccumulator> by_correctness;

  for (const auto& es : samples) {
    if (!es.output.label_covered || !es.output.box_covered ||
        !es.output.joint_covered)
      throw std::invalid_argument(
          "stratified report needs predictions evaluated against truth");
    overall.add(es);
    by_class[es.sample.truth.label].add(es);
    if (es.sample.truth.box.size() == 4) {
      const auto box = geometry::Box::from_coords(es.sample.truth.box);
      by_stratum[geometry::stratum(box)].add(es);
    }
    by_correctness[es.output.predicted_label == es.sample.truth.label].add(es);
  }

  EvaluationReport report;
  report.overall = overall.finalize();
  for (const auto& [k, acc] : by_class) report.by_class[k] = acc.finalize();
  for (const auto& [k, acc] : by_stratum) report.by_stratum[k] = acc.finalize();
  for (const auto& [k, acc] : by_correctness)
    report.by_correctness[k] = acc.finalize();
  return report;
}

}  // namespace confbox::metrics
