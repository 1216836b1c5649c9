#include "lyapchain/jets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lyapchain {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return std::round(b);
}

// ---------------------------------------------------------------------------------------------
// Jet arithmetic

Jet Jet::constant(double value, int order) {
  Jet j(order);
  j.c_[0] = value;
  j.m_[0] = std::abs(value);
  return j;
}

Jet Jet::variable(double value, int order) {
  Jet j = constant(value, order);
  if (order >= 1) {
    j.c_[1] = 1.0;
    j.m_[1] = 1.0;
  }
  return j;
}

double Jet::derivative(int k) const { return factorial(k) * c_[k]; }

Jet Jet::differentiated() const {
  Jet d(std::max(order() - 1, 0));
  for (int k = 0; k + 1 <= order(); ++k) d.set(k, (k + 1) * c_[k + 1], (k + 1) * m_[k + 1]);
  return d;
}

Jet& Jet::operator+=(const Jet& o) {
  for (size_t k = 0; k < c_.size(); ++k) {
    c_[k] += o.c_[k];
    m_[k] += o.m_[k];
  }
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  for (size_t k = 0; k < c_.size(); ++k) {
    c_[k] -= o.c_[k];
    m_[k] += o.m_[k];
  }
  return *this;
}

Jet& Jet::operator*=(double s) {
  const double a = std::abs(s);
  for (size_t k = 0; k < c_.size(); ++k) {
    c_[k] *= s;
    m_[k] *= a;
  }
  return *this;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (double& c : r.c_) c = -c;
  return r;
}

bool Jet::finite() const {
  for (double c : c_)
    if (!std::isfinite(c) || std::abs(c) > 1e300) return false;
  return true;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator*(Jet a, double s) { return a *= s; }
Jet operator*(double s, Jet a) { return a *= s; }

Jet operator+(Jet a, double s) {
  a.set(0, a[0] + s, a.mag(0) + std::abs(s));
  return a;
}

Jet operator*(const Jet& a, const Jet& b) {
  const int order = a.order();
  Jet r(order);
  const auto ac = a.coeffs(), am = a.mags(), bc = b.coeffs(), bm = b.mags();
  for (int k = 0; k <= order; ++k) {
    double c = 0.0, m = 0.0;
    for (int i = 0; i <= k; ++i) {
      c += ac[i] * bc[k - i];
      m += am[i] * bm[k - i];
    }
    r.set(k, c, m);
  }
  return r;
}

Jet pow(const Jet& a, int n) {
  if (n < 0) throw std::invalid_argument("jet pow needs n >= 0");
  Jet result = Jet::constant(1.0, a.order());
  Jet base = a;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

namespace {

// Coefficient n >= 1 of sin(v), cos(v) from v' = scale * u'.
void sincos_step(const Jet& u, double scale, Jet& s, Jet& c, int n) {
  double sv = 0.0, sm = 0.0, cv = 0.0, cm = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double du = j * scale * u[j];
    const double dm = j * std::abs(scale) * u.mag(j);
    sv += du * c[n - j];
    sm += dm * c.mag(n - j);
    cv -= du * s[n - j];
    cm += dm * s.mag(n - j);
  }
  s.set(n, sv / n, sm / n);
  c.set(n, cv / n, cm / n);
}

}  // namespace

std::pair<Jet, Jet> sincos(const Jet& u) {
  const int order = u.order();
  Jet s(order), c(order);
  s.set(0, std::sin(u[0]), std::abs(std::sin(u[0])));
  c.set(0, std::cos(u[0]), std::abs(std::cos(u[0])));
  for (int n = 1; n <= order; ++n) sincos_step(u, 1.0, s, c, n);
  return {s, c};
}

// ---------------------------------------------------------------------------------------------
// Basis

BasisJet::BasisJet(int degree, int harmonics, int order)
    : order_(order),
      powers_(std::max(degree, 0), Jet(order)),
      sin_(harmonics, Jet(order)),
      cos_(harmonics, Jet(order)) {}

void BasisJet::extend(const Jet& u, int n) {
  if (!powers_.empty()) {
    powers_[0].set(n, u[n], u.mag(n));
    for (size_t m = 1; m < powers_.size(); ++m) {
      const Jet& prev = powers_[m - 1];
      double c = 0.0, mg = 0.0;
      for (int i = 0; i <= n; ++i) {
        c += u[i] * prev[n - i];
        mg += u.mag(i) * prev.mag(n - i);
      }
      powers_[m].set(n, c, mg);
    }
  }
  for (size_t h = 0; h < sin_.size(); ++h) {
    const double k = static_cast<double>(h + 1);
    if (n == 0) {
      const double sv = std::sin(k * u[0]), cv = std::cos(k * u[0]);
      sin_[h].set(0, sv, std::abs(sv));
      cos_[h].set(0, cv, std::abs(cv));
    } else {
      sincos_step(u, k, sin_[h], cos_[h], n);
    }
  }
}

void BasisJet::combine(const Potential& pot, int n, double& value, double& mag) const {
  value = 0.0;
  mag = 0.0;
  const auto& poly = pot.poly();
  if (n == 0 && !poly.empty()) {
    value += poly[0] + pot.shift();
    mag += std::abs(poly[0] + pot.shift());
  } else if (n == 0) {
    value += pot.shift();
    mag += std::abs(pot.shift());
  }
  for (size_t m = 1; m < poly.size(); ++m) {
    value += poly[m] * powers_[m - 1][n];
    mag += std::abs(poly[m]) * powers_[m - 1].mag(n);
  }
  const auto& cc = pot.cos_coeffs();
  const auto& sc = pot.sin_coeffs();
  for (size_t h = 0; h < cc.size(); ++h) {
    value += cc[h] * cos_[h][n] + sc[h] * sin_[h][n];
    mag += std::abs(cc[h]) * cos_[h].mag(n) + std::abs(sc[h]) * sin_[h].mag(n);
  }
}

Jet BasisJet::compose(const Potential& pot) const {
  Jet r(order_);
  for (int n = 0; n <= order_; ++n) {
    double v, m;
    combine(pot, n, v, m);
    r.set(n, v, m);
  }
  return r;
}

// ---------------------------------------------------------------------------------------------
// StateJet

namespace {

constexpr int kCachedDerivs = 4;  // V, V', V'', V'''

std::vector<Potential> derivative_table(const Potential& pot) {
  std::vector<Potential> t;
  t.push_back(pot);
  for (int d = 1; d < kCachedDerivs; ++d) t.push_back(pot.derivative(d));
  return t;
}

}  // namespace

StateJet::StateJet(const ChainSpec& spec, int order) : spec_(spec), order_(order) {
  if (order < 0) throw std::invalid_argument("jet order must be >= 0");
  for (const Potential& v : spec.interaction) {
    interaction_derivs_.push_back(derivative_table(v));
    interaction_basis_.emplace_back(v.degree(), v.harmonics(), order);
  }
  for (const Potential& u : spec.pinning) {
    pinning_derivs_.push_back(derivative_table(u));
    pinning_basis_.emplace_back(u.degree(), u.harmonics(), order);
  }
}

StateJet StateJet::propagate(const ChainSpec& spec, const State& s, int order) {
  check_state(spec, s);
  StateJet sj(spec, order);
  const int n = spec.n;
  sj.p_.assign(n, Jet(order));
  sj.q_.assign(n, Jet(order));
  std::vector<Jet> bonds(n - 1, Jet(order));
  for (int j = 0; j < n; ++j) {
    sj.p_[j].set(0, s.p[j], std::abs(s.p[j]));
    sj.q_[j].set(0, s.q[j], std::abs(s.q[j]));
  }
  std::vector<double> fv(n), fm(n);
  for (int k = 0; k <= order; ++k) {
    for (int b = 0; b + 1 < n; ++b) {
      bonds[b].set(k, sj.q_[b][k] - sj.q_[b + 1][k], sj.q_[b].mag(k) + sj.q_[b + 1].mag(k));
      sj.interaction_basis_[b].extend(bonds[b], k);
    }
    for (size_t j = 0; j < spec.pinning.size(); ++j) sj.pinning_basis_[j].extend(sj.q_[j], k);
    if (k == order) break;
    for (int j = 0; j < n; ++j) {
      fv[j] = spec.damping[j] ? -sj.p_[j][k] : 0.0;
      fm[j] = spec.damping[j] ? sj.p_[j].mag(k) : 0.0;
    }
    for (int b = 0; b + 1 < n; ++b) {
      double v, m;
      sj.interaction_basis_[b].combine(sj.interaction_derivs_[b][1], k, v, m);
      fv[b] -= v;
      fm[b] += m;
      fv[b + 1] += v;
      fm[b + 1] += m;
    }
    for (size_t j = 0; j < spec.pinning.size(); ++j) {
      double v, m;
      sj.pinning_basis_[j].combine(sj.pinning_derivs_[j][1], k, v, m);
      fv[j] -= v;
      fm[j] += m;
    }
    const double inv = 1.0 / (k + 1);
    for (int j = 0; j < n; ++j) {
      sj.q_[j].set(k + 1, sj.p_[j][k] * inv, sj.p_[j].mag(k) * inv);
      sj.p_[j].set(k + 1, fv[j] * inv, fm[j] * inv);
    }
  }
  return sj;
}

StateJet StateJet::from_coordinates(const ChainSpec& spec, std::vector<Jet> p, std::vector<Jet> q) {
  if (static_cast<int>(p.size()) != spec.n || static_cast<int>(q.size()) != spec.n)
    throw std::invalid_argument("coordinate jets do not match chain");
  StateJet sj(spec, p.front().order());
  sj.p_ = std::move(p);
  sj.q_ = std::move(q);
  sj.build_bases();
  return sj;
}

void StateJet::build_bases() {
  const int n = spec_.n;
  for (int b = 0; b + 1 < n; ++b) {
    const Jet bond = q_[b] - q_[b + 1];
    for (int k = 0; k <= order_; ++k) interaction_basis_[b].extend(bond, k);
  }
  for (size_t j = 0; j < spec_.pinning.size(); ++j)
    for (int k = 0; k <= order_; ++k) pinning_basis_[j].extend(q_[j], k);
}

Jet StateJet::interaction(int bond, int deriv) const {
  if (deriv < kCachedDerivs) return interaction_basis_[bond].compose(interaction_derivs_[bond][deriv]);
  return interaction_basis_[bond].compose(spec_.interaction[bond].derivative(deriv));
}

Jet StateJet::pinning(int site, int deriv) const {
  if (deriv < kCachedDerivs) return pinning_basis_[site].compose(pinning_derivs_[site][deriv]);
  return pinning_basis_[site].compose(spec_.pinning[site].derivative(deriv));
}

bool StateJet::overflow() const {
  for (const Jet& j : p_)
    if (!j.finite()) return true;
  for (const Jet& j : q_)
    if (!j.finite()) return true;
  return false;
}

// ---------------------------------------------------------------------------------------------
// Observables

Jet energy_jet(const StateJet& sj) {
  const ChainSpec& spec = sj.spec();
  Jet h(sj.order());
  for (int j = 0; j < spec.n; ++j) h += 0.5 * (sj.p(j) * sj.p(j));
  for (int b = 0; b + 1 < spec.n; ++b) h += sj.interaction(b, 0);
  for (size_t j = 0; j < spec.pinning.size(); ++j) h += sj.pinning(static_cast<int>(j), 0);
  return h;
}

Jet xi_jet(const StateJet& sj, int bond) {
  if (bond < 0 || bond > sj.spec().n - 1) throw std::out_of_range("xi index out of range");
  if (bond == 0) return Jet(sj.order());
  return -sj.interaction(bond - 1, 1);
}

Jet lie_xi_jet(const StateJet& sj, int bond) {
  if (bond < 0 || bond > sj.spec().n - 1) throw std::out_of_range("xi index out of range");
  if (bond == 0) return Jet(sj.order());
  return -((sj.p(bond - 1) - sj.p(bond)) * sj.interaction(bond - 1, 2));
}

Observable Observable::energy() { return {"H", [](const StateJet& sj) { return energy_jet(sj); }}; }

Observable Observable::momentum(int j) {
  return {"p" + std::to_string(j + 1), [j](const StateJet& sj) { return sj.p(j); }};
}

Observable Observable::coordinate(int j) {
  return {"q" + std::to_string(j + 1), [j](const StateJet& sj) { return sj.q(j); }};
}

Observable Observable::momentum_squared(int j) {
  return {"p" + std::to_string(j + 1) + "^2", [j](const StateJet& sj) { return sj.p(j) * sj.p(j); }};
}

Observable Observable::xi(int bond) {
  return {"xi" + std::to_string(bond), [bond](const StateJet& sj) { return xi_jet(sj, bond); }};
}

Observable Observable::lie_xi(int bond) {
  return {"Lxi" + std::to_string(bond), [bond](const StateJet& sj) { return lie_xi_jet(sj, bond); }};
}

Observable Observable::product(const Observable& a, const Observable& b) {
  return {a.name + "*" + b.name, [a, b](const StateJet& sj) { return a.eval(sj) * b.eval(sj); }};
}

LieResult lie_derivatives(const ChainSpec& spec, const State& s, const Observable& g, int kmax) {
  const StateJet sj = StateJet::propagate(spec, s, kmax);
  const Jet gj = g.eval(sj);
  LieResult r;
  r.values.resize(kmax + 1);
  r.scales.resize(kmax + 1);
  for (int k = 0; k <= kmax; ++k) {
    const double f = factorial(k);
    r.values[k] = f * gj[k];
    r.scales[k] = f * gj.mag(k);
  }
  r.overflow = sj.overflow() || !gj.finite();
  return r;
}

LieResult energy_lie_derivatives(const ChainSpec& spec, const State& s, int kmax) {
  const StateJet sj = StateJet::propagate(spec, s, kmax);
  Jet d(kmax);
  for (int j = 0; j < spec.n; ++j)
    if (spec.damped(j)) d += sj.p(j) * sj.p(j);
  LieResult r;
  r.values.resize(kmax + 1);
  r.scales.resize(kmax + 1);
  const Jet h = energy_jet(sj);
  r.values[0] = h[0];
  r.scales[0] = h.mag(0);
  // dH/dt = -sum_damped p_j^2, so L^{k+1} H = -k! d_k
  for (int k = 0; k < kmax; ++k) {
    const double f = factorial(k);
    r.values[k + 1] = -f * d[k];
    r.scales[k + 1] = f * d.mag(k);
  }
  r.overflow = sj.overflow() || !d.finite();
  return r;
}

OrderResult order_from(const LieResult& lie, double state_norm, int kmax, const OrderOptions& options) {
  OrderResult r;
  r.kmax = kmax;
  r.overflow = lie.overflow;
  r.scale_note = options.scale == ZeroScale::Majorant ? "tol*majorant_k" : "tol*(1+|s|^k)";
  double threshold = 0.0;
  for (int k = options.kmin; k <= kmax; ++k) {
    threshold = options.scale == ZeroScale::Majorant
                    ? options.zero_tol * lie.scales[k]
                    : options.zero_tol * (1.0 + std::pow(state_norm, k));
    // A coefficient that is exactly zero is never resolved, even against a zero scale.
    if (std::abs(lie.values[k]) > threshold && lie.values[k] != 0.0) {
      r.resolved = true;
      r.order = k;
      r.value = lie.values[k];
      r.threshold = threshold;
      return r;
    }
  }
  r.order = kmax;
  r.threshold = threshold;
  return r;
}

OrderResult order_of(const ChainSpec& spec, const State& s, const Observable& g, int kmax,
                     const OrderOptions& options) {
  const LieResult lie = lie_derivatives(spec, s, g, kmax);
  double norm2 = 0.0;
  for (int j = 0; j < spec.n; ++j) norm2 += s.p[j] * s.p[j] + s.q[j] * s.q[j];
  return order_from(lie, std::sqrt(norm2), kmax, options);
}

std::vector<Jet> propagate_ode(std::span<const double> x0, int order,
                               const std::function<std::vector<Jet>(std::span<const Jet>)>& rhs) {
  std::vector<Jet> x;
  for (double v : x0) x.push_back(Jet::constant(v, order));
  for (int k = 0; k < order; ++k) {
    const std::vector<Jet> f = rhs(x);
    for (size_t i = 0; i < x.size(); ++i) x[i].set(k + 1, f[i][k] / (k + 1), f[i].mag(k) / (k + 1));
  }
  return x;
}

}  // namespace lyapchain
