#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace epa {

/// Product-moment correlation. Throws Degenerate for a constant input.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of the average-rank vectors.
double spearman(std::span<const double> x, std::span<const double> y);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
/// Student's t CDF with `dof` degrees of freedom.
double t_cdf(double t, double dof);
/// Inverse of t_cdf, by bisection on the incomplete-beta CDF.
double t_quantile(double p, double dof);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
  bool contains(double v) const { return lower <= v && v <= upper; }
};

/// Least-squares line with 95% Student-t intervals.
struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_se = 0.0;
  double slope_se = 0.0;
  std::size_t n = 0;
  Interval slope_ci;
  double x_mean = 0.0;
  double sxx = 0.0;
  double t_crit = 0.0;

  double predict(double x) const { return intercept + slope * x; }
  /// Pointwise 95% interval for the mean response at x.
  Interval band(double x) const;
};

RegressionFit ols_fit(std::span<const double> x, std::span<const double> y);

struct MeanInterval {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// mean +/- t(0.975, n-1) s / sqrt(n), s the sample standard deviation.
MeanInterval mean_ci(std::span<const double> values);

}  // namespace epa
