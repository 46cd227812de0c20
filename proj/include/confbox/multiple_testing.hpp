#pragma once

#include "confbox/types.hpp"

namespace confbox::multiple_testing {

// Per-coordinate miscoverage after splitting alpha_box across m tests.
double bonferroni_alpha(double alpha_box, int m);

// Column-wise ranks, 1-based; tied values all receive the largest rank of
// their tie group so the induced thresholds stay conservative.
Eigen::MatrixXi rank_matrix(const Matrix& scores);

// Row-wise maximum rank.
Eigen::VectorXi max_ranks(const Eigen::MatrixXi& ranks);

// Conformal quantile of the max-rank statistic: the smallest rank r such that
// at least ceil((n+1)(1-alpha)) rows have every coordinate rank <= r, or +inf
// when no rank suffices at this level.
double max_rank_threshold(const Matrix& scores, double alpha);

// Per-coordinate score quantiles induced by the max-rank threshold: the r-th
// smallest score of every column. All +inf when the threshold is +inf.
// scores is n x m with n calibration rows.
Vector max_rank_quantiles(const Matrix& scores, double alpha);

// True when every coordinate score is within its quantile.
bool joint_coverage_check(const Vector& scores, const Vector& quantiles);

}  // namespace confbox::multiple_testing
