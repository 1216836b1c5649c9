#include "lyapchain/potentials.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace lyapchain {

namespace {

// n-th derivative of a cos(kx) + b sin(kx) is k^n [a cos(kx + n pi/2) + b sin(kx + n pi/2)].
void rotate_pair(double a, double b, int n, double& ca, double& cb) {
  switch (n & 3) {
    case 0: ca = a; cb = b; break;
    case 1: ca = b; cb = -a; break;
    case 2: ca = -a; cb = -b; break;
    default: ca = -b; cb = a; break;
  }
}

}  // namespace

Potential Potential::trig(double c0, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs) {
  Potential p;
  p.poly_ = {c0};
  p.cos_ = std::move(cos_coeffs);
  p.sin_ = std::move(sin_coeffs);
  p.normalize();
  return p;
}

Potential Potential::polynomial(std::vector<double> coeffs) {
  Potential p;
  p.poly_ = std::move(coeffs);
  p.normalize();
  return p;
}

Potential Potential::mixed(std::vector<double> poly, std::vector<double> cos_coeffs,
                           std::vector<double> sin_coeffs) {
  Potential p;
  p.poly_ = std::move(poly);
  p.cos_ = std::move(cos_coeffs);
  p.sin_ = std::move(sin_coeffs);
  p.normalize();
  return p;
}

void Potential::normalize() {
  const size_t h = std::max(cos_.size(), sin_.size());
  cos_.resize(h, 0.0);
  sin_.resize(h, 0.0);
  while (!cos_.empty() && cos_.back() == 0.0 && sin_.back() == 0.0) {
    cos_.pop_back();
    sin_.pop_back();
  }
  while (!poly_.empty() && poly_.back() == 0.0) poly_.pop_back();
  domain_ = degree() <= 0 ? Domain::Torus : Domain::Line;
}

Potential::Kind Potential::kind() const {
  if (degree() <= 0) return Kind::TrigPoly;
  if (cos_.empty()) return Kind::Polynomial;
  return Kind::Mixed;
}

int Potential::degree() const { return static_cast<int>(poly_.size()) - 1; }

Potential Potential::shifted(double delta) const {
  Potential p = *this;
  p.shift_ += delta;
  return p;
}

double Potential::eval(double x, int order) const {
  double value = 0.0;
  // Horner on the order-th derivative of the polynomial.
  const int deg = degree();
  for (int m = deg; m >= order; --m) {
    double c = poly_[m];
    for (int i = 0; i < order; ++i) c *= static_cast<double>(m - i);
    value = value * x + c;
  }
  for (size_t i = 0; i < cos_.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    double ca, cb;
    rotate_pair(cos_[i], sin_[i], order, ca, cb);
    const double scale = std::pow(k, order);
    value += scale * (ca * std::cos(k * x) + cb * std::sin(k * x));
  }
  if (order == 0) value += shift_;
  return value;
}

Potential Potential::derivative(int order) const {
  Potential d;
  const int deg = degree();
  for (int m = order; m <= deg; ++m) {
    double c = poly_[m];
    for (int i = 0; i < order; ++i) c *= static_cast<double>(m - i);
    d.poly_.push_back(c);
  }
  d.cos_.resize(cos_.size());
  d.sin_.resize(sin_.size());
  for (size_t i = 0; i < cos_.size(); ++i) {
    const double scale = std::pow(static_cast<double>(i + 1), order);
    rotate_pair(cos_[i], sin_[i], order, d.cos_[i], d.sin_[i]);
    d.cos_[i] *= scale;
    d.sin_[i] *= scale;
  }
  d.normalize();
  // Derivatives of a torus potential stay on the torus.
  if (domain_ == Domain::Torus) d.domain_ = Domain::Torus;
  return d;
}

double Potential::trig_bound(int order) const {
  double s = 0.0;
  for (size_t i = 0; i < cos_.size(); ++i)
    s += std::pow(static_cast<double>(i + 1), order) * std::hypot(cos_[i], sin_[i]);
  return s;
}

std::string Potential::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "poly[";
  for (size_t i = 0; i < poly_.size(); ++i) os << (i ? "," : "") << poly_[i];
  os << "] cos[";
  for (size_t i = 0; i < cos_.size(); ++i) os << (i ? "," : "") << cos_[i];
  os << "] sin[";
  for (size_t i = 0; i < sin_.size(); ++i) os << (i ? "," : "") << sin_[i];
  os << "] shift=" << shift_;
  return os.str();
}

ValidationReport validate_rotor_potential(const Potential& pot, const RotorValidationConfig& config) {
  ValidationReport report;
  if (pot.domain() != Domain::Torus) {
    report.message = "rotor potential must be 2pi-periodic (no polynomial part)";
    return report;
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const auto nondeg = [&](double x) {
    const double d1 = pot.eval(x, 1);
    const double d2 = pot.eval(x, 2);
    return d1 * d1 + d2 * d2;
  };
  // The shift is computed on the unshifted potential so re-validation is idempotent.
  const auto value = [&](double x) { return pot.eval(x, 0) - pot.shift(); };
  const GridMin nd = grid_minimize(nondeg, 0.0, two_pi, config.grid_points, config.refine_rounds);
  const GridMin v = grid_minimize(value, 0.0, two_pi, config.grid_points, config.refine_rounds);
  report.min_nondegeneracy = nd.value;
  report.argmin_nondegeneracy = nd.x;
  report.min_value = v.value;
  report.argmin_value = v.x;
  report.shift = v.value < config.min_value ? config.min_value - v.value : 0.0;
  if (nd.value <= config.nondegeneracy_floor) {
    std::ostringstream os;
    os << "(V')^2 + (V'')^2 = " << nd.value << " <= " << config.nondegeneracy_floor << " at x = " << nd.x;
    report.message = os.str();
    return report;
  }
  report.pass = true;
  report.message = "ok";
  return report;
}

Potential normalize_rotor_potential(const Potential& pot, const RotorValidationConfig& config) {
  const ValidationReport r = validate_rotor_potential(pot, config);
  return pot.shifted(r.shift - pot.shift());
}

}  // namespace lyapchain
