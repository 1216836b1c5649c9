#pragma once

#include <span>
#include <string>
#include <vector>

namespace lyapchain {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r2 = 0.0;
  int n = 0;

  /// Two-sided confidence interval for the slope at the given level (Student t, n - 2 dof).
  double slope_lo(double level = 0.95) const;
  double slope_hi(double level = 0.95) const;
  /// One-sided bounds: P(slope >= lower_bound) = level.
  double slope_lower_bound(double level = 0.95) const;
  double slope_upper_bound(double level = 0.95) const;
};

/// Ordinary least squares y = intercept + slope x. Needs at least 3 points for an error estimate.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

double student_t_quantile(double p, double dof);

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1 denominator).
double stddev(std::span<const double> v);
double standard_error(std::span<const double> v);

std::string format_double(double v);

}  // namespace lyapchain
