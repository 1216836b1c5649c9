#include "lyapchain/oscillator_analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unsupported/Eigen/Polynomials>

#include "lyapchain/detail/parallel.hpp"
#include "lyapchain/detail/random.hpp"
#include "lyapchain/errors.hpp"
#include "lyapchain/sampling.hpp"

namespace lyapchain {

namespace {

// Every root of sum c_i x^i (+/- slack in the constant term) has modulus below this.
double cauchy_bound(const std::vector<double>& c, double slack) {
  const double lead = std::abs(c.back());
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) m = std::max(m, (std::abs(c[i]) + (i == 0 ? slack : 0.0)) / lead);
  if (c.size() == 1) m = slack / lead;
  return 1.0 + m;
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  // f(lo) and f(hi) of opposite sign; 100 halvings are plenty at double precision
  const bool lo_neg = f(lo) < 0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) < 0) == lo_neg)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

std::vector<double> real_roots(const std::vector<double>& c) {
  std::vector<double> out;
  if (c.size() < 2) return out;
  Eigen::VectorXd coeffs(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) coeffs[i] = c[i];
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(coeffs);
  for (const auto& z : solver.roots())
    if (std::abs(z.imag()) <= 1e-7 * (1.0 + std::abs(z))) out.push_back(z.real());
  return out;
}

// Beyond the returned X, fn stays on the sign of its leading term for f's polynomial part.
double outer_bound(const Potential& f, int order, double extra) {
  const Potential d = f.derivative(order);
  return cauchy_bound(d.poly(), d.trig_bound(0) + extra);
}

bool strictly_convex_with_min_at_zero(const Potential& f, const OscillatorValidationConfig& cfg, std::string& why) {
  if (std::abs(f.eval(0.0, 1)) > cfg.origin_tol) {
    why = "f'(0) = " + std::to_string(f.eval(0.0, 1)) + " != 0";
    return false;
  }
  const auto R = convexity_radius(f);
  if (!R) {
    why = "f'' is not positive at infinity";
    return false;
  }
  const double L = std::max(cfg.box, *R + 1.0);
  double prev = f.eval(-L, 1);
  for (int i = 1; i < cfg.grid_points; ++i) {
    const double x = -L + 2.0 * L * i / (cfg.grid_points - 1);
    const double d = f.eval(x, 1);
    if (!(d > prev)) {
      why = "f' is not increasing near x = " + std::to_string(x);
      return false;
    }
    prev = d;
  }
  return true;
}

}  // namespace

const char* to_string(OscillatorClass c) {
  switch (c) {
    case OscillatorClass::StrictlyConvex: return "StrictlyConvex";
    case OscillatorClass::GeneralConvexAtInfinity: return "GeneralConvexAtInfinity";
    default: return "Invalid";
  }
}

std::optional<double> convexity_radius(const Potential& f) {
  const Potential g = f.derivative(2);
  const int deg = g.degree();
  const double t = g.trig_bound(0);
  if (deg < 0) return std::nullopt;  // pure Fourier part has zero mean
  const double lead = g.poly().back();
  if (deg % 2 == 1 || lead <= 0) return std::nullopt;
  if (deg == 0) {
    if (lead > t) return 0.0;
    // periodic: positive everywhere or somewhere non-positive forever
    for (int i = 0; i < 8192; ++i)
      if (g.eval(2.0 * std::numbers::pi * i / 8192) <= 0) return std::nullopt;
    return 0.0;
  }
  double R = 0.0;
  if (g.harmonics() == 0) {
    for (double r : real_roots(g.poly())) R = std::max(R, std::abs(r));
  } else {
    const double X = cauchy_bound(g.poly(), t);
    const int n = 40000;
    const double step = 2.0 * X / n;
    for (int i = 0; i <= n; ++i) {
      const double x = -X + step * i;
      if (g.eval(x) <= 0) R = std::max(R, std::abs(x));
    }
    if (R > 0) {
      // push the boundary out to the next positive grid point on either side
      R = std::min(X, R + step);
    }
  }
  return R * (1.0 + 1e-9) + 1e-12;
}

OscillatorValidationReport validate_oscillator_potentials(const ChainSpec& spec,
                                                          const OscillatorValidationConfig& cfg) {
  if (spec.kind != ChainKind::Oscillator) throw std::invalid_argument("oscillator validation needs an oscillator chain");
  OscillatorValidationReport rep;
  const int n = spec.n;

  double R = 0.0;
  std::string why;
  for (std::size_t k = 0; k < spec.interaction.size(); ++k) {
    const auto r = convexity_radius(spec.interaction[k]);
    if (!r) {
      rep.message = "V_" + std::to_string(k + 1) + "'' is not positive outside a compact set";
      return rep;
    }
    R = std::max(R, *r);
  }
  rep.R = R;

  bool strict = true;
  for (std::size_t k = 0; k < spec.pinning.size() && strict; ++k)
    if (!strictly_convex_with_min_at_zero(spec.pinning[k], cfg, why)) {
      strict = false;
      why = "U_" + std::to_string(k + 1) + ": " + why;
    }
  for (std::size_t k = 0; k < spec.interaction.size() && strict; ++k)
    if (!strictly_convex_with_min_at_zero(spec.interaction[k], cfg, why)) {
      strict = false;
      why = "V_" + std::to_string(k + 1) + ": " + why;
    }
  if (strict) {
    rep.pass = true;
    rep.cls = OscillatorClass::StrictlyConvex;
    rep.threshold = 4 * n - 1;
    rep.message = "all potentials strictly convex with minimum at 0";
    return rep;
  }

  for (std::size_t k = 0; k < spec.pinning.size(); ++k) {
    const Potential& u = spec.pinning[k];
    if (u.degree() < 2 || u.degree() % 2 == 1 || u.poly().back() <= 0) {
      rep.message = "U_" + std::to_string(k + 1) + "' does not tend to +-infinity (" + why + ")";
      return rep;
    }
  }
  const int pts = cfg.grid_points;
  for (std::size_t k = 0; k < spec.interaction.size(); ++k) {
    const Potential& v = spec.interaction[k];
    for (int i = 0; i < pts; ++i) {
      const double x = -(R + 1.0) + 2.0 * (R + 1.0) * i / (pts - 1);
      const double d2 = v.eval(x, 2), d3 = v.eval(x, 3);
      if (d2 * d2 + d3 * d3 <= cfg.nondegeneracy_floor) {
        std::ostringstream os;
        os << "V_" << k + 1 << "'' and V_" << k + 1 << "''' vanish together near x = " << x;
        rep.message = os.str();
        return rep;
      }
    }
  }
  rep.pass = true;
  rep.cls = OscillatorClass::GeneralConvexAtInfinity;
  rep.threshold = 3 * (1 << (n + 1)) - 5;
  rep.message = "convex outside |x| < " + std::to_string(R) + " (not strictly convex: " + why + ")";
  return rep;
}

std::vector<double> equilibrium_residual(const ChainSpec& spec, std::span<const double> q) {
  const int n = spec.n;
  std::vector<double> r(n);
  for (int k = 0; k < n; ++k) {
    double v = spec.pinning[k].eval(q[k], 1);
    if (k > 0) v -= spec.interaction[k - 1].eval(q[k - 1] - q[k], 1);
    if (k + 1 < n) v += spec.interaction[k].eval(q[k] - q[k + 1], 1);
    r[k] = v;
  }
  return r;
}

namespace {

// Smallest a >= floor with g(x) >= level for all x >= a, for g = U' (or its mirror).
double level_crossing(const std::function<double(double)>& g, double level, double X, double floor, int points) {
  if (X <= floor) return floor;
  const double step = (X - floor) / (points - 1);
  for (int i = points - 1; i >= 0; --i) {
    const double x = floor + step * i;
    if (g(x) < level) {
      if (i == points - 1) return X;
      return bisect([&](double y) { return g(y) - level; }, x, x + step);
    }
  }
  return floor;
}

Eigen::MatrixXd residual_jacobian(const ChainSpec& spec, std::span<const double> q) {
  const int n = spec.n;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    J(k, k) = spec.pinning[k].eval(q[k], 2);
    if (k > 0) {
      const double c = spec.interaction[k - 1].eval(q[k - 1] - q[k], 2);
      J(k, k) += c;
      J(k, k - 1) = -c;
    }
    if (k + 1 < n) {
      const double c = spec.interaction[k].eval(q[k] - q[k + 1], 2);
      J(k, k) += c;
      J(k, k + 1) = -c;
    }
  }
  return J;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::optional<std::vector<double>> damped_newton(const ChainSpec& spec, std::vector<double> q, double tol,
                                                 int max_iter) {
  const int n = spec.n;
  std::vector<double> r = equilibrium_residual(spec, q);
  double norm = inf_norm(r);
  std::vector<double> trial(n);
  // keep polishing past the tolerance: degenerate roots are approached only linearly and would
  // otherwise leave a trail of distinct near-roots
  int polish = 0;
  for (int it = 0; it < max_iter && norm > 0.0 && (norm > tol || polish++ < 60); ++it) {
    const Eigen::MatrixXd J = residual_jacobian(spec, q);
    Eigen::VectorXd rhs(n);
    for (int k = 0; k < n; ++k) rhs[k] = -r[k];
    const Eigen::VectorXd dq = J.partialPivLu().solve(rhs);
    if (!dq.allFinite()) return std::nullopt;
    double t = 1.0;
    bool moved = false;
    while (t > 1e-10) {
      for (int k = 0; k < n; ++k) trial[k] = q[k] + t * dq[k];
      const std::vector<double> rt = equilibrium_residual(spec, trial);
      const double nt = inf_norm(rt);
      if (nt < (1.0 - 1e-4 * t) * norm) {
        q = trial;
        r = rt;
        norm = nt;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  if (!(norm <= tol)) return std::nullopt;
  return q;
}

}  // namespace

EquilibriumBox equilibrium_box(const ChainSpec& spec, double R, int grid_points) {
  EquilibriumBox box;
  box.R = R;
  double m = 0.0;
  for (const Potential& v : spec.interaction)
    for (int i = 0; i < grid_points; ++i) {
      const double x = grid_points == 1 ? 0.0 : -R + 2.0 * R * i / (grid_points - 1);
      m = std::max(m, std::abs(v.eval(x, 1)));
    }
  box.M = m + 1.0;
  const double level = 2.0 * box.M;
  const double floor = R * (1.0 + 1e-9) + 1e-9;  // strictly above R
  box.a = floor;
  box.b = floor;
  for (const Potential& u : spec.pinning) {
    const double X = outer_bound(u, 1, level);
    box.a = std::max(box.a, level_crossing([&](double x) { return u.eval(x, 1); }, level, X, floor, 20001));
    box.b = std::max(box.b, level_crossing([&](double x) { return -u.eval(-x, 1); }, level, X, floor, 20001));
  }
  return box;
}

EquilibriumResult find_equilibria(const ChainSpec& spec, const EquilibriumConfig& cfg) {
  const OscillatorValidationReport val = validate_oscillator_potentials(spec, cfg.validation);
  if (!val.pass) throw std::invalid_argument("potentials fail validation: " + val.message);
  const int n = spec.n;
  EquilibriumResult res;
  res.box = equilibrium_box(spec, val.R);
  const EquilibriumBox& box = res.box;

  const int starts = cfg.starts_per_particle * n + 1;
  res.starts = starts;
  std::vector<std::optional<std::vector<double>>> found(starts);
  parallel_for(starts, cfg.threads, [&](std::size_t i) {
    std::vector<double> q(n, 0.0);
    if (i > 0) {
      SplitMix64 rng = stream(cfg.seed, i, 41);
      for (double& x : q) x = -box.b + (box.a + box.b) * rng.uniform();
    }
    found[i] = damped_newton(spec, q, cfg.residual_tol, cfg.max_iterations);
  });

  for (const auto& f : found) {
    if (!f) continue;
    ++res.converged;
    bool inside = true;
    for (double x : *f) inside = inside && x > -box.b && x < box.a;
    if (!inside) ++res.outside_box;
    bool dup = false;
    for (const auto& r : res.roots) {
      double d = 0.0;
      for (int k = 0; k < n; ++k) d = std::max(d, std::abs(r[k] - (*f)[k]));
      if (d <= cfg.dedupe) {
        dup = true;
        break;
      }
    }
    if (!dup) res.roots.push_back(*f);
  }
  std::sort(res.roots.begin(), res.roots.end());
  res.found = !res.roots.empty();
  std::ostringstream os;
  if (res.found)
    os << res.roots.size() << " distinct roots from " << res.converged << " of " << starts << " starts";
  else
    os << "no convergence: none of " << starts << " starts reached residual " << cfg.residual_tol;
  if (res.outside_box) os << "; " << res.outside_box << " converged outside the certified box";
  res.message = os.str();
  return res;
}

std::string state_hash(const State& s) {
  std::string bytes(sizeof(double) * (s.p.size() + s.q.size()), '\0');
  if (!s.p.empty()) std::memcpy(bytes.data(), s.p.data(), sizeof(double) * s.p.size());
  if (!s.q.empty()) std::memcpy(bytes.data() + sizeof(double) * s.p.size(), s.q.data(), sizeof(double) * s.q.size());
  return hex64(fnv1a(bytes));
}

OrderReport order_statistics(const ChainSpec& spec, const OrderConfig& cfg) {
  const OscillatorValidationReport val = validate_oscillator_potentials(spec);
  if (!val.pass) throw std::invalid_argument("potentials fail validation: " + val.message);
  const int n = spec.n;
  OrderReport rep;
  rep.threshold = val.threshold;
  rep.kmax = cfg.kmax > 0 ? cfg.kmax : val.threshold;
  if (rep.kmax < rep.threshold) throw std::invalid_argument("kmax below the order threshold");
  EquilibriumConfig ec;
  ec.threads = cfg.threads;
  const EquilibriumResult eq = find_equilibria(spec, ec);
  rep.box = eq.box;
  const double lo = -cfg.box_margin * eq.box.b, hi = cfg.box_margin * eq.box.a;
  const Observable H = Observable::energy();

  rep.rows.resize(cfg.samples);
  parallel_for(cfg.samples, cfg.threads, [&](std::size_t i) {
    SplitMix64 rng = stream(cfg.seed, i, 31);
    OrderRow& row = rep.rows[i];
    row.family = static_cast<int>(i % 3);
    State s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    if (row.family < 2 || !eq.found) {
      for (double& x : s.q) x = lo + (hi - lo) * rng.uniform();
      if (row.family == 0)
        for (double& x : s.p) x = cfg.momentum_scale * standard_normal(rng);
    } else {
      // near an equilibrium, at distance 10^-1 .. 10^-6, alternately with and without momentum
      const std::size_t slot = i / 3;
      const double d = std::pow(10.0, -1.0 - static_cast<double>(slot % 6));
      const bool q_only = (slot / 6) % 2 == 0;
      const auto& root = eq.roots[static_cast<std::size_t>(rng.uniform() * eq.roots.size()) % eq.roots.size()];
      std::vector<double> dir(2 * n);
      double norm = 0.0;
      for (int k = 0; k < 2 * n; ++k) {
        dir[k] = (q_only && k < n) ? 0.0 : standard_normal(rng);
        norm += dir[k] * dir[k];
      }
      norm = std::sqrt(norm);
      for (int k = 0; k < n; ++k) {
        s.p[k] = d * dir[k] / norm;
        s.q[k] = root[k] + d * dir[n + k] / norm;
      }
    }
    row.s = s;
    row.hash = state_hash(s);
    row.h = energy(spec, s);
    const OrderResult o = order_of(spec, s, H, rep.kmax, cfg.order);
    row.resolved = o.resolved;
    row.order = o.resolved ? o.order : rep.kmax;
    bool inK = true;
    for (int k = 0; k < n; ++k) inK = inK && s.p[k] == 0.0 && s.q[k] > -eq.box.b && s.q[k] < eq.box.a;
    row.in_K = inK;
  });

  const OrderRow* first_bad = nullptr;
  for (const OrderRow& row : rep.rows) {
    if (row.resolved) rep.max_finite_order = std::max(rep.max_finite_order, row.order);
    if (!row.resolved) ++rep.unresolved;
    if (row.in_K) continue;
    if (row.resolved) rep.max_order_outside_K = std::max(rep.max_order_outside_K, row.order);
    if (!row.resolved) ++rep.unresolved_outside_K;
    if (!row.resolved || row.order > rep.threshold) {
      ++rep.violations;
      if (!first_bad) first_bad = &row;
    }
  }
  if (first_bad && cfg.throw_on_violation) {
    std::ostringstream os;
    os.precision(17);
    os << "state outside K with " << (first_bad->resolved ? "order " + std::to_string(first_bad->order) : "no order")
       << " (threshold " << rep.threshold << "): p=(";
    for (int k = 0; k < n; ++k) os << (k ? "," : "") << first_bad->s.p[k];
    os << ") q=(";
    for (int k = 0; k < n; ++k) os << (k ? "," : "") << first_bad->s.q[k];
    os << ")";
    throw ThresholdViolation(os.str());
  }
  return rep;
}

void write_order_csv(std::ostream& os, const OrderReport& rep, const Provenance* prov) {
  CsvWriter w(os, {"state_hash", "H", "order", "resolved", "in_K"}, prov);
  for (const OrderRow& r : rep.rows) {
    w << r.hash << r.h << r.order << r.resolved << r.in_K;
    w.end_row();
  }
}

}  // namespace lyapchain
