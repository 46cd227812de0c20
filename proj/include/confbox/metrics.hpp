#pragma once

#include <limits>
#include <map>
#include <vector>

#include "confbox/box_intervals.hpp"
#include "confbox/geometry.hpp"
#include "confbox/label_sets.hpp"
#include "confbox/pipeline.hpp"
#include "confbox/types.hpp"

namespace confbox::metrics {

double empirical_coverage(const std::vector<bool>& covered);

double mean_set_size(const std::vector<label_sets::LabelSet>& sets);

// Mean width over samples and coordinates. One-sided intervals are converted
// to their center-to-outer-bound form first so widths are comparable across
// methods; intervals that stay unbounded are excluded and counted.
struct MpiwResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  int counted = 0;
  int excluded_unbounded = 0;
};
MpiwResult mpiw(const std::vector<box_intervals::BoxInterval>& intervals,
                const std::vector<Vector>& predicted_boxes);

// Mean of sqrt(area(outer box) / area(predicted box)), the linear blow-up
// factor of the largest box consistent with the interval.
struct StretchResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  int counted = 0;
  int excluded = 0;
};
StretchResult stretch(const std::vector<box_intervals::BoxInterval>& intervals,
                      const std::vector<Vector>& predicted_boxes);

double pinball_loss(double value, double quantile, double tau);
double mean_pinball(const Vector& values, const Vector& quantiles, double tau);

struct ReportCell {
  int count = 0;
  double label_coverage = std::numeric_limits<double>::quiet_NaN();
  double box_coverage = std::numeric_limits<double>::quiet_NaN();
  double joint_coverage = std::numeric_limits<double>::quiet_NaN();
  double mean_set_size = std::numeric_limits<double>::quiet_NaN();
  double mpiw = std::numeric_limits<double>::quiet_NaN();
  int mpiw_excluded = 0;
  double stretch = std::numeric_limits<double>::quiet_NaN();
};

struct EvaluatedSample {
  pipeline::TwoStepOutput output;
  MatchedSample sample;
};

struct EvaluationReport {
  ReportCell overall;
  std::map<int, ReportCell> by_class;                      // true label
  std::map<geometry::SizeStratum, ReportCell> by_stratum;  // truth box area
  std::map<bool, ReportCell> by_correctness;  // top class equals truth
};

// Every sample must carry coverage flags (i.e. was predicted against truth).
// Strata appear only for 4-coordinate boxes.
EvaluationReport stratified_report(const std::vector<EvaluatedSample>& samples);

}  // namespace confbox::metrics
