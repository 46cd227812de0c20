#include "confbox/multiple_testing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "confbox/conformal.hpp"

namespace confbox::multiple_testing {

double bonferroni_alpha(double alpha_box, int m) {
  if (!(alpha_box > 0.0 && alpha_box < 1.0))
    throw std::invalid_argument("alpha_box must lie in (0,1)");
  if (m < 1) throw std::invalid_argument("m must be positive");
  return alpha_box / static_cast<double>(m);
}

Eigen::MatrixXi rank_matrix(const Matrix& scores) {
  const auto n = scores.rows();
  const auto m = scores.cols();
  Eigen::MatrixXi ranks(n, m);
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index k = 0; k < m; ++k) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return scores(a, k) < scores(b, k);
    });
    // Walk tie groups; everyone in a group gets the group's largest rank.
    Eigen::Index i = 0;
    while (i < n) {
      Eigen::Index j = i;
      while (j + 1 < n && scores(order[j + 1], k) == scores(order[i], k)) ++j;
      for (Eigen::Index t = i; t <= j; ++t)
        ranks(order[t], k) = static_cast<int>(j + 1);
      i = j + 1;
    }
  }
  return ranks;
}

Eigen::VectorXi max_ranks(const Eigen::MatrixXi& ranks) {
  return ranks.rowwise().maxCoeff();
}

double max_rank_threshold(const Matrix& scores, double alpha) {
  const auto n = scores.rows();
  if (n == 0) return kInf;
  const Eigen::VectorXi r = max_ranks(rank_matrix(scores));
  return conformal::conformal_quantile(r.cast<double>(), alpha);
}

Vector max_rank_quantiles(const Matrix& scores, double alpha) {
  const auto n = scores.rows();
  const auto m = scores.cols();
  const double rhat = max_rank_threshold(scores, alpha);
  if (!std::isfinite(rhat)) return Vector::Constant(m, kInf);

  const auto r = static_cast<Eigen::Index>(rhat);  // integral rank in [1, n]
  Vector q(m);
  std::vector<double> col(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) col[i] = scores(i, k);
    std::nth_element(col.begin(), col.begin() + (r - 1), col.end());
    q[k] = col[r - 1];
  }
  return q;
}

bool joint_coverage_check(const Vector& scores, const Vector& quantiles) {
  if (scores.size() != quantiles.size())
    throw std::invalid_argument("scores and quantiles must have equal length");
  for (Eigen::Index k = 0; k < scores.size(); ++k)
    if (!(scores[k] <= quantiles[k])) return false;
  return true;
}

}  // namespace confbox::multiple_testing
