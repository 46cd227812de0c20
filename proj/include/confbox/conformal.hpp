#pragma once

#include <cstddef>
#include <optional>

#include "confbox/types.hpp"

namespace confbox::conformal {

// Calibration scores plus bookkeeping about the slice they came from.
struct ScoreSet {
  Vector scores;
  int class_label{0};             // 0 = unpartitioned
  std::optional<int> coordinate;  // box coordinate index when sliced that way
};

// 1-based index of the order statistic backing the split-conformal quantile:
// k = ceil((n+1)(1-alpha)). A result > n means the quantile saturates to +inf.
std::size_t order_statistic_index(std::size_t n, double alpha);

// k-th smallest score with k as above; +inf when the set is empty or k > n.
// alpha must lie in (0,1).
double conformal_quantile(const Vector& scores, double alpha);
inline double conformal_quantile(const ScoreSet& s, double alpha) {
  return conformal_quantile(s.scores, alpha);
}

// (1 + #{s_i >= candidate}) / (n+1), in (0,1]. For tie-free scores this is
// dual to the quantile: pvalue > alpha  <=>  candidate <= quantile(alpha).
double conformal_pvalue(const Vector& scores, double candidate);
inline double conformal_pvalue(const ScoreSet& s, double candidate) {
  return conformal_pvalue(s.scores, candidate);
}

// Distribution of the coverage attained by a calibrated quantile, conditional
// on the calibration draw: Beta(n+1-l, l) with l = floor((n+1)alpha), assuming
// a.s. distinct scores. l = 0 degenerates to coverage 1 almost surely.
struct CoverageDistribution {
  double a{0};
  double b{0};
  bool degenerate{false};

  double mean() const;
  double quantile(double p) const;  // p in (0,1); 1 when degenerate
  double cdf(double x) const;
};

CoverageDistribution coverage_distribution(std::size_t n, double alpha);

}  // namespace confbox::conformal
