#include "lyapchain/chain.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace lyapchain {

void ChainSpec::check() const {
  if (n < 2) throw std::invalid_argument("chain needs N >= 2");
  if (static_cast<int>(interaction.size()) != n - 1)
    throw std::invalid_argument("interaction must have N-1 potentials");
  if (kind == ChainKind::Rotator && !pinning.empty())
    throw std::invalid_argument("rotator chains have no pinning potentials");
  if (kind == ChainKind::Oscillator && static_cast<int>(pinning.size()) != n)
    throw std::invalid_argument("oscillator chains need N pinning potentials");
  if (static_cast<int>(damping.size()) != n) throw std::invalid_argument("damping mask must have N entries");
  if (static_cast<int>(temperatures.size()) != n)
    throw std::invalid_argument("temperatures must have N entries");
  for (int j = 0; j < n; ++j) {
    if (temperatures[j] < 0.0) throw std::invalid_argument("temperatures must be nonnegative");
    if (!damping[j] && temperatures[j] != 0.0)
      throw std::invalid_argument("temperature on undamped particle " + std::to_string(j + 1));
  }
  if (kind == ChainKind::Rotator)
    for (const Potential& v : interaction)
      if (v.domain() != Domain::Torus) throw std::invalid_argument("rotator interactions must be periodic");
}

ChainSpec ChainSpec::rotator(std::vector<Potential> interaction) {
  ChainSpec s;
  s.kind = ChainKind::Rotator;
  s.n = static_cast<int>(interaction.size()) + 1;
  s.interaction = std::move(interaction);
  s.damping.assign(s.n, false);
  s.damping[0] = true;
  s.temperatures.assign(s.n, 0.0);
  s.check();
  return s;
}

ChainSpec ChainSpec::oscillator(std::vector<Potential> pinning, std::vector<Potential> interaction) {
  ChainSpec s;
  s.kind = ChainKind::Oscillator;
  s.n = static_cast<int>(pinning.size());
  s.pinning = std::move(pinning);
  s.interaction = std::move(interaction);
  s.damping.assign(s.n, false);
  s.damping[0] = true;
  s.temperatures.assign(s.n, 0.0);
  s.check();
  return s;
}

State canonical(const ChainSpec& spec, State s) {
  if (spec.kind != ChainKind::Rotator) return s;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (double& x : s.q) {
    x = std::fmod(x, two_pi);
    if (x < 0.0) x += two_pi;
    if (x >= two_pi) x = 0.0;
  }
  return s;
}

void check_state(const ChainSpec& spec, const State& s) {
  if (static_cast<int>(s.p.size()) != spec.n || static_cast<int>(s.q.size()) != spec.n)
    throw std::invalid_argument("state dimension does not match chain");
  for (int j = 0; j < spec.n; ++j)
    if (!std::isfinite(s.p[j]) || !std::isfinite(s.q[j])) throw std::invalid_argument("non-finite state");
}

double kinetic_energy(const State& s) {
  double k = 0.0;
  for (double pj : s.p) k += 0.5 * pj * pj;
  return k;
}

double potential_energy(const ChainSpec& spec, std::span<const double> q) {
  double u = 0.0;
  for (int j = 0; j + 1 < spec.n; ++j) u += spec.interaction[j].eval(q[j] - q[j + 1]);
  for (size_t j = 0; j < spec.pinning.size(); ++j) u += spec.pinning[j].eval(q[j]);
  return u;
}

double energy(const ChainSpec& spec, const State& s) { return kinetic_energy(s) + potential_energy(spec, s.q); }

void forces(const ChainSpec& spec, std::span<const double> p, std::span<const double> q, std::span<double> out) {
  const int n = spec.n;
  for (int j = 0; j < n; ++j) out[j] = spec.damping[j] ? -p[j] : 0.0;
  for (int j = 0; j + 1 < n; ++j) {
    const double f = spec.interaction[j].eval(q[j] - q[j + 1], 1);
    out[j] -= f;
    out[j + 1] += f;
  }
  for (size_t j = 0; j < spec.pinning.size(); ++j) out[j] -= spec.pinning[j].eval(q[j], 1);
}

TangentVector vector_field(const ChainSpec& spec, const State& s) {
  TangentVector t;
  t.dq = s.p;
  t.dp.assign(spec.n, 0.0);
  forces(spec, s.p, s.q, t.dp);
  return t;
}

double xi(const ChainSpec& spec, const State& s, int j) {
  if (j < 0 || j > spec.n - 1) throw std::out_of_range("xi index out of range");
  if (j == 0) return 0.0;
  return -spec.interaction[j - 1].eval(s.q[j - 1] - s.q[j], 1);
}

double lie_xi(const ChainSpec& spec, const State& s, int j) {
  if (j < 0 || j > spec.n - 1) throw std::out_of_range("xi index out of range");
  if (j == 0) return 0.0;
  return -(s.p[j - 1] - s.p[j]) * spec.interaction[j - 1].eval(s.q[j - 1] - s.q[j], 2);
}

double lie_energy_analytic(const ChainSpec& spec, const State& s) {
  const int n = spec.n;
  std::vector<double> grad_q(n, 0.0);
  for (int j = 0; j + 1 < n; ++j) {
    const double f = spec.interaction[j].eval(s.q[j] - s.q[j + 1], 1);
    grad_q[j] += f;
    grad_q[j + 1] -= f;
  }
  for (size_t j = 0; j < spec.pinning.size(); ++j) grad_q[j] += spec.pinning[j].eval(s.q[j], 1);
  const TangentVector f = vector_field(spec, s);
  double l = 0.0;
  for (int j = 0; j < n; ++j) l += grad_q[j] * f.dq[j] + s.p[j] * f.dp[j];
  return l;
}

double dissipation(const ChainSpec& spec, const State& s) {
  double d = 0.0;
  for (int j = 0; j < spec.n; ++j)
    if (spec.damping[j]) d -= s.p[j] * s.p[j];
  return d;
}

}  // namespace lyapchain
