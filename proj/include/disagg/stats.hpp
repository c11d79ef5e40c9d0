#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace disagg::stats {

/// Linear-interpolation quantile (type 7) of an ascending sample.
double quantile_sorted(std::span<const double> sorted, double p);

double normal_cdf(double x);

/// Two-sided p-value of a standard normal statistic.
double two_sided_normal_p(double z);

double mean(std::span<const double> v);
/// Sample variance (n-1 denominator).
double variance(std::span<const double> v);
double pearson(std::span<const double> a, std::span<const double> b);

/// Least squares coefficients via column-pivoting QR.
Eigen::VectorXd ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

}  // namespace disagg::stats
