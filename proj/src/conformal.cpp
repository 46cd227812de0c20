#include "confbox/conformal.hpp"

#include <boost/math/distributions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace confbox::conformal {

namespace {

// (n+1)*(1-alpha) can land a hair away from an exact integer in floating
// point; snap before rounding so designs that hit an integer exactly keep
// their index.
double snap_integer(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0,1)");
}

}  // namespace

std::size_t order_statistic_index(std::size_t n, double alpha) {
  check_alpha(alpha);
  const double x = snap_integer((static_cast<double>(n) + 1.0) * (1.0 - alpha));
  return static_cast<std::size_t>(std::ceil(x));
}

double conformal_quantile(const Vector& scores, double alpha) {
  const auto n = static_cast<std::size_t>(scores.size());
  const std::size_t k = order_statistic_index(n, alpha);
  if (n == 0 || k > n) return kInf;
  std::vector<double> s(scores.data(), scores.data() + n);
  std::nth_element(s.begin(), s.begin() + (k - 1), s.end());
  return s[k - 1];
}

double conformal_pvalue(const Vector& scores, double candidate) {
  const auto n = scores.size();
  Eigen::Index worse = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (scores[i] >= candidate) ++worse;
  return static_cast<double>(1 + worse) / static_cast<double>(n + 1);
}

double CoverageDistribution::mean() const {
  if (degenerate) return 1.0;
  return a / (a + b);
}

double CoverageDistribution::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("probability must lie in (0,1)");
  if (degenerate) return 1.0;
  return boost::math::quantile(boost::math::beta_distribution<double>(a, b), p);
}

double CoverageDistribution::cdf(double x) const {
  if (degenerate) return x >= 1.0 ? 1.0 : 0.0;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::cdf(boost::math::beta_distribution<double>(a, b), x);
}

CoverageDistribution coverage_distribution(std::size_t n, double alpha) {
  check_alpha(alpha);
  const double x = snap_integer((static_cast<double>(n) + 1.0) * alpha);
  const auto l = static_cast<std::size_t>(std::floor(x));
  CoverageDistribution d;
  if (l == 0) {
    // Quantile index exceeds n at this level: the quantile is +inf and the
    // attained coverage is 1 with probability one.
    d.a = static_cast<double>(n + 1);
    d.b = 0.0;
    d.degenerate = true;
    return d;
  }
  d.a = static_cast<double>(n + 1 - l);
  d.b = static_cast<double>(l);
  return d;
}

}  // namespace confbox::conformal
