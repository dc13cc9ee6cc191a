#include "epa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "epa/error.hpp"

namespace epa {
namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_n) {
  if (x.size() != y.size()) {
    fail(ErrorCode::ShapeMismatch, "paired samples of lengths " + std::to_string(x.size()) +
                                       " and " + std::to_string(y.size()));
  }
  if (x.size() < min_n)
    fail(ErrorCode::InvalidArgument, "need at least " + std::to_string(min_n) + " observations");
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 200000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  fail(ErrorCode::Internal, "incomplete beta continued fraction did not converge");
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::Degenerate, "correlation of a constant sample");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double shared = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) fail(ErrorCode::InvalidArgument, "incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) fail(ErrorCode::InvalidArgument, "incomplete beta needs 0 <= x <= 1");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_cdf(double t, double dof) {
  if (!(dof > 0.0)) fail(ErrorCode::InvalidArgument, "t distribution needs dof > 0");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::InvalidArgument, "t quantile needs 0 < p < 1");
  if (!(dof >= 1.0)) fail(ErrorCode::InvalidArgument, "t quantile needs dof >= 1");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -t_quantile(1.0 - p, dof);
  // Work with the upper tail q = 1 - p to keep precision for p close to 1.
  const double q = 1.0 - p;
  auto upper_tail = [dof](double t) { return 0.5 * incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t)); };
  double lo = 0.0, hi = 1.0;
  while (upper_tail(hi) > q) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) fail(ErrorCode::Internal, "t quantile bracket diverged");
  }
  for (int it = 0; it < 2000 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (upper_tail(mid) > q) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

Interval RegressionFit::band(double x) const {
  const double fitted = predict(x);
  const double dx = x - x_mean;
  const double se = residual_se * std::sqrt(1.0 / static_cast<double>(n) + dx * dx / sxx);
  const double half = t_crit * se;
  return {fitted - half, fitted + half};
}

RegressionFit ols_fit(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 3);
  RegressionFit fit;
  fit.n = x.size();
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) fail(ErrorCode::Degenerate, "regression on a constant predictor");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.predict(x[i]);
    sse += r * r;
  }
  const double dof = static_cast<double>(fit.n - 2);
  fit.residual_se = std::sqrt(sse / dof);
  fit.slope_se = fit.residual_se / std::sqrt(sxx);
  fit.x_mean = mx;
  fit.sxx = sxx;
  fit.t_crit = t_quantile(0.975, dof);
  fit.slope_ci = {fit.slope - fit.t_crit * fit.slope_se, fit.slope + fit.t_crit * fit.slope_se};
  return fit;
}

MeanInterval mean_ci(std::span<const double> values) {
  if (values.size() < 2) fail(ErrorCode::InvalidArgument, "mean interval needs at least 2 values");
  const double n = static_cast<double>(values.size());
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  const double s = std::sqrt(ss / (n - 1.0));
  const double half = t_quantile(0.975, n - 1.0) * s / std::sqrt(n);
  return {m, m - half, m + half};
}

}  // namespace epa
