#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "lyapchain/potentials.hpp"

namespace lyapchain {

enum class ChainKind { Rotator, Oscillator };

/// Nearest-neighbour chain of unit-mass particles.
///
/// Rotators: H = sum p_j^2/2 + sum_{j<N} V_j(q_j - q_{j+1}), q on the torus.
/// Oscillators: H additionally carries pinning sum_j U_j(q_j), q on the line.
/// Damped particles feel -p_j; their Langevin temperatures are only used by the SDE integrator.
struct ChainSpec {
  ChainKind kind = ChainKind::Rotator;
  int n = 2;
  std::vector<Potential> interaction;  ///< V_1..V_{N-1}
  std::vector<Potential> pinning;      ///< U_1..U_N (oscillators only)
  std::vector<bool> damping;           ///< default: particle 1 only
  std::vector<double> temperatures;    ///< zero on undamped particles

  /// Throws std::invalid_argument if lengths or damping/temperature masks are inconsistent.
  void check() const;
  bool damped(int j) const { return damping[j]; }

  static ChainSpec rotator(std::vector<Potential> interaction);
  static ChainSpec oscillator(std::vector<Potential> pinning, std::vector<Potential> interaction);
};

/// Phase point. Indices are zero-based throughout: p[0] is p_1.
struct State {
  std::vector<double> p;
  std::vector<double> q;

  int size() const { return static_cast<int>(p.size()); }
};

struct TangentVector {
  std::vector<double> dq;
  std::vector<double> dp;
};

/// Reduces rotator coordinates to [0, 2pi); oscillator states are returned unchanged.
State canonical(const ChainSpec& spec, State s);

void check_state(const ChainSpec& spec, const State& s);

double kinetic_energy(const State& s);
double potential_energy(const ChainSpec& spec, std::span<const double> q);
double energy(const ChainSpec& spec, const State& s);

/// Deterministic vector field, damping included.
TangentVector vector_field(const ChainSpec& spec, const State& s);

/// Allocation-free force evaluation: out[j] = dp_j/dt.
void forces(const ChainSpec& spec, std::span<const double> p, std::span<const double> q,
            std::span<double> out);

/// xi_j = -V_j'(q_j - q_{j+1}) for 1 <= j <= N-1, xi_0 = 0 (rotators).
double xi(const ChainSpec& spec, const State& s, int j);

/// L_F xi_j = -(p_j - p_{j+1}) V_j''(q_j - q_{j+1}); zero for j = 0.
double lie_xi(const ChainSpec& spec, const State& s, int j);

/// grad H . F from the explicit gradient, without the dissipation identity.
double lie_energy_analytic(const ChainSpec& spec, const State& s);

/// -sum over damped particles of p_j^2.
double dissipation(const ChainSpec& spec, const State& s);

}  // namespace lyapchain
