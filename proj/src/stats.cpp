#include "lyapchain/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lyapchain {

double student_t_quantile(double p, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, p);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs >= 2 paired points");
  LinearFit f;
  f.n = static_cast<int>(x.size());
  const double mx = mean(x), my = mean(y);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    sse += r * r;
  }
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  f.slope_se = f.n > 2 ? std::sqrt(sse / (f.n - 2) / sxx) : std::numeric_limits<double>::infinity();
  return f;
}

namespace {
double tq(const LinearFit& f, double p) {
  if (f.n <= 2) return std::numeric_limits<double>::infinity();
  return student_t_quantile(p, f.n - 2);
}
}  // namespace

double LinearFit::slope_lo(double level) const { return slope - tq(*this, 0.5 + level / 2) * slope_se; }
double LinearFit::slope_hi(double level) const { return slope + tq(*this, 0.5 + level / 2) * slope_se; }
double LinearFit::slope_lower_bound(double level) const { return slope - tq(*this, level) * slope_se; }
double LinearFit::slope_upper_bound(double level) const { return slope + tq(*this, level) * slope_se; }

double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double standard_error(std::span<const double> v) {
  return v.empty() ? 0.0 : stddev(v) / std::sqrt(static_cast<double>(v.size()));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace lyapchain
