#include "lyapchain/sampling.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>

namespace lyapchain {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Root of f on [lo, hi] with f(lo), f(hi) of opposite sign.
double bracketed_root(const std::function<double(double)>& f, double lo, double hi) {
  std::uintmax_t iters = 200;
  const auto tol = boost::math::tools::eps_tolerance<double>(50);
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

// Expands a bracket around x0 until f changes sign.
std::optional<double> expanding_root(const std::function<double(double)>& f, double x0) {
  const double f0 = f(x0);
  if (f0 == 0.0) return x0;
  for (double span = 0.5; span < 1e6; span *= 2) {
    const double lo = x0 - span, hi = x0 + span;
    const double flo = f(lo), fhi = f(hi);
    if (std::signbit(flo) != std::signbit(f0)) return bracketed_root(f, lo, x0);
    if (std::signbit(fhi) != std::signbit(f0)) return bracketed_root(f, x0, hi);
  }
  return std::nullopt;
}

std::vector<double> normal_vector(int n, SplitMix64& rng) {
  std::vector<double> v(n);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = standard_normal(rng);
      norm += x * x;
    }
  } while (norm < 1e-24);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// Scales direction d (|d| = 1 not required) so that H(lambda d, q) = w.
std::optional<std::vector<double>> momentum_on_level(const ChainSpec& spec, const std::vector<double>& q,
                                                     const std::vector<double>& d, double w) {
  const double u = potential_energy(spec, q);
  if (u >= w) return std::nullopt;
  double dd = 0.0;
  for (double x : d) dd += x * x;
  if (dd == 0.0) return std::nullopt;
  State s{d, q};
  const auto f = [&](double lambda) {
    for (std::size_t j = 0; j < d.size(); ++j) s.p[j] = lambda * d[j];
    return energy(spec, s) - w;
  };
  double hi = std::sqrt(2.0 * (w - u) / dd) * 2.0 + 1e-300;
  while (f(hi) < 0) hi *= 2;
  const double lambda = bracketed_root(f, 0.0, hi);
  std::vector<double> p(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) p[j] = lambda * d[j];
  return p;
}

}  // namespace

const char* to_string(SamplingMeasure m) {
  switch (m) {
    case SamplingMeasure::MomentumSphere: return "sphere";
    case SamplingMeasure::KineticSimplex: return "simplex";
    default: return "mixed";
  }
}

SamplingMeasure sampling_measure_from_string(const std::string& s) {
  if (s == "sphere") return SamplingMeasure::MomentumSphere;
  if (s == "simplex") return SamplingMeasure::KineticSimplex;
  if (s == "mixed") return SamplingMeasure::Mixed;
  throw std::invalid_argument("unknown sampling measure '" + s + "' (sphere, simplex, mixed)");
}

const char* to_string(LevelFamily f) {
  switch (f) {
    case LevelFamily::Generic: return "generic";
    case LevelFamily::P1Zero: return "p1_zero";
    case LevelFamily::PZero: return "p_zero";
    case LevelFamily::FirstForceFree: return "first_force_free";
    default: return "degenerate_curve";
  }
}

double standard_normal(SplitMix64& rng) {
  // Box-Muller on our own uniforms keeps the stream identical across standard libraries.
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

State sample_rotor_state(const ChainSpec& spec, double h, SamplingMeasure measure, SplitMix64& rng,
                         std::size_t index) {
  const int n = spec.n;
  State s{std::vector<double>(n), std::vector<double>(n)};
  double kin = -1.0;
  for (int attempt = 0; attempt < 10000 && kin <= 0.0; ++attempt) {
    for (double& q : s.q) q = two_pi * rng.uniform();
    kin = h - potential_energy(spec, s.q);
  }
  if (kin <= 0.0) throw std::invalid_argument("energy level below the potential range");
  bool sphere = measure == SamplingMeasure::MomentumSphere;
  if (measure == SamplingMeasure::Mixed) sphere = index % 2 == 0;
  if (sphere) {
    const std::vector<double> d = normal_vector(n, rng);
    for (int j = 0; j < n; ++j) s.p[j] = d[j] * std::sqrt(2.0 * kin);
  } else {
    std::vector<double> e(n);
    double sum = 0.0;
    for (double& x : e) {
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      x = -std::log(u);
      sum += x;
    }
    for (int j = 0; j < n; ++j) {
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      s.p[j] = sign * std::sqrt(2.0 * kin * e[j] / sum);
    }
  }
  return s;
}

bool solve_equilibrium_prefix(const ChainSpec& spec, std::vector<double>& q, int count) {
  for (int i = 0; i < count && i + 1 < spec.n; ++i) {
    const double fixed = spec.pinning.empty() ? 0.0 : spec.pinning[i].eval(q[i], 1);
    const double left = i > 0 ? spec.interaction[i - 1].eval(q[i - 1] - q[i], 1) : 0.0;
    const auto f = [&](double next) { return fixed - left + spec.interaction[i].eval(q[i] - next, 1); };
    const auto root = expanding_root(f, q[i]);
    if (!root) return false;
    q[i + 1] = *root;
  }
  return true;
}

LevelSampler::LevelSampler(const ChainSpec& s) : spec(s), base_q(s.n, 0.0) {
  if (spec.kind == ChainKind::Oscillator) {
    // Gradient descent with backtracking from the origin; only a reasonable ray origin is needed.
    std::vector<double> g(spec.n), trial(spec.n);
    std::vector<double> zero(spec.n, 0.0), f(spec.n);
    double u = potential_energy(spec, base_q);
    double step = 0.1;
    for (int it = 0; it < 5000; ++it) {
      forces(spec, zero, base_q, f);
      double gn = 0.0;
      for (int j = 0; j < spec.n; ++j) gn += f[j] * f[j];
      if (gn < 1e-24) break;
      bool moved = false;
      for (int tries = 0; tries < 60; ++tries) {
        for (int j = 0; j < spec.n; ++j) trial[j] = base_q[j] + step * f[j];
        const double ut = potential_energy(spec, trial);
        if (ut < u - 0.25 * step * gn) {
          base_q = trial;
          u = ut;
          step *= 1.5;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
  }
  base_u = potential_energy(spec, base_q);
}

std::optional<std::vector<double>> LevelSampler::q_on_level(const std::vector<double>& dir, double target) const {
  std::vector<double> q(spec.n);
  const auto at = [&](double t) {
    for (int j = 0; j < spec.n; ++j) q[j] = base_q[j] + t * dir[j];
    return potential_energy(spec, q) - target;
  };
  if (at(0.0) >= 0.0) return std::nullopt;
  double hi = 1.0;
  int guard = 0;
  while (at(hi) < 0.0) {
    hi *= 2.0;
    if (++guard > 200) return std::nullopt;
  }
  const double t = bracketed_root(at, 0.0, hi);
  at(t);
  return q;
}

std::optional<State> LevelSampler::sample(double w, LevelFamily family, SplitMix64& rng) const {
  const int n = spec.n;
  if (w <= base_u) return std::nullopt;
  if (spec.kind == ChainKind::Rotator) {
    // q uniform on the torus; only the momentum families are meaningful.
    if (family == LevelFamily::PZero || family == LevelFamily::DegenerateCurve ||
        family == LevelFamily::FirstForceFree)
      return std::nullopt;
    State s{std::vector<double>(n), std::vector<double>(n)};
    for (int attempt = 0; attempt < 1000; ++attempt) {
      for (double& q : s.q) q = two_pi * rng.uniform();
      std::vector<double> d = normal_vector(n, rng);
      if (family == LevelFamily::P1Zero) d[0] = 0.0;
      if (auto p = momentum_on_level(spec, s.q, d, w)) {
        s.p = *p;
        return s;
      }
    }
    return std::nullopt;
  }

  const double room = w - base_u;
  for (int attempt = 0; attempt < 50; ++attempt) {
    State s{std::vector<double>(n, 0.0), std::vector<double>(n)};
    switch (family) {
      case LevelFamily::PZero: {
        auto q = q_on_level(normal_vector(n, rng), w);
        if (!q) continue;
        s.q = *q;
        return s;
      }
      case LevelFamily::DegenerateCurve: {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        std::vector<double> q(n);
        bool solvable = true;
        const auto at = [&](double t) {
          q.assign(n, 0.0);
          q[0] = base_q[0] + sign * t;
          for (int j = 1; j < n; ++j) q[j] = base_q[j];
          solvable = solve_equilibrium_prefix(spec, q, n - 1);
          return solvable ? potential_energy(spec, q) - w : -1.0;
        };
        if (at(0.0) >= 0.0 || !solvable) return std::nullopt;
        double hi = 1.0;
        int guard = 0;
        while (at(hi) < 0.0 && solvable && ++guard < 200) hi *= 2.0;
        if (!solvable || guard >= 200) return std::nullopt;
        const double t = bracketed_root(at, 0.0, hi);
        at(t);
        if (!solvable) return std::nullopt;
        s.q = q;
        return s;
      }
      default: break;
    }
    const double share = rng.uniform();  // kinetic fraction
    auto q = q_on_level(normal_vector(n, rng), base_u + (1.0 - share) * room);
    if (!q) continue;
    if (family == LevelFamily::FirstForceFree) {
      std::vector<double>& qq = *q;
      const auto f = [&](double q1) {
        double r = spec.pinning[0].eval(q1, 1);
        if (n > 1) r += spec.interaction[0].eval(q1 - qq[1], 1);
        return r;
      };
      const auto root = expanding_root(f, qq[0]);
      if (!root) return std::nullopt;
      qq[0] = *root;
    }
    std::vector<double> d = normal_vector(n, rng);
    if (family != LevelFamily::Generic) d[0] = 0.0;
    auto p = momentum_on_level(spec, *q, d, w);
    if (!p) continue;
    s.q = *q;
    s.p = *p;
    return s;
  }
  return std::nullopt;
}

}  // namespace lyapchain
