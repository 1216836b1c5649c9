#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lyapchain/chain.hpp"
#include "lyapchain/csv.hpp"
#include "lyapchain/jets.hpp"

namespace lyapchain {

enum class OscillatorClass { StrictlyConvex, GeneralConvexAtInfinity, Invalid };

const char* to_string(OscillatorClass c);

struct OscillatorValidationConfig {
  double box = 10.0;        ///< grid half-width for the convexity checks (widened to R + 1 when needed)
  int grid_points = 20001;
  double nondegeneracy_floor = 1e-8;  ///< for (V'')^2 + (V''')^2 on [-R-1, R+1]
  double origin_tol = 1e-12;          ///< |f'(0)| allowed for a minimum at the origin
};

struct OscillatorValidationReport {
  bool pass = false;
  OscillatorClass cls = OscillatorClass::Invalid;
  int threshold = 0;  ///< order bound r: 4N-1 or 3 * 2^{N+1} - 5
  double R = 0.0;     ///< V_k'' > 0 for |x| >= R, all k
  std::string message;
};

/// Smallest R >= 0 (up to a relative margin) with f''(x) > 0 for |x| >= R, or nullopt when f is
/// not convex at infinity. Pure polynomials use the real roots of f''; anything with Fourier
/// terms is scanned up to a Cauchy-type bound.
std::optional<double> convexity_radius(const Potential& f);

OscillatorValidationReport validate_oscillator_potentials(const ChainSpec& spec,
                                                          const OscillatorValidationConfig& config = {});

/// (U_1' + V_1', U_2' - V_1' + V_2', ..., U_N' - V_{N-1}') at q, with V_j' taken at q_j - q_{j+1}.
std::vector<double> equilibrium_residual(const ChainSpec& spec, std::span<const double> q);

/// Certified box [-b, a]^N containing every equilibrium.
struct EquilibriumBox {
  double R = 0.0;
  double M = 0.0;  ///< max_{|x| <= R} max_k |V_k'(x)| + 1
  double a = 0.0;  ///< U_k'(x) >= 2M for x >= a, all k
  double b = 0.0;  ///< U_k'(x) <= -2M for x <= -b, all k
};

EquilibriumBox equilibrium_box(const ChainSpec& spec, double R, int grid_points = 4097);

struct EquilibriumConfig {
  int starts_per_particle = 32;
  double dedupe = 1e-6;
  double residual_tol = 1e-10;
  int max_iterations = 200;
  std::uint64_t seed = 3;
  int threads = 1;
  OscillatorValidationConfig validation;
};

struct EquilibriumResult {
  std::vector<std::vector<double>> roots;  ///< sorted lexicographically
  EquilibriumBox box;
  int starts = 0;
  int converged = 0;       ///< starts that reached the residual tolerance
  int outside_box = 0;     ///< converged starts landing outside the box (would contradict the certificate)
  bool found = false;      ///< false reports a NoConvergence outcome
  std::string message;
};

/// Needs a spec that passes validate_oscillator_potentials; throws std::invalid_argument otherwise.
EquilibriumResult find_equilibria(const ChainSpec& spec, const EquilibriumConfig& config = {});

struct OrderConfig {
  int samples = 10000;
  int kmax = 0;  ///< 0: use the validated threshold r
  std::uint64_t seed = 4;
  int threads = 1;
  double momentum_scale = 1.0;      ///< generic family: p ~ N(0, scale^2)
  double box_margin = 1.5;          ///< random q are drawn from the certified box widened by this factor
  bool throw_on_violation = true;
  OrderOptions order;
};

struct OrderRow {
  std::string hash;  ///< FNV-1a of the raw state bytes, hex
  State s;
  double h = 0.0;
  int order = 0;  ///< kmax when unresolved
  bool resolved = false;
  bool in_K = false;
  int family = 0;  ///< 0 generic, 1 p = 0 with random q, 2 near an equilibrium
};

struct OrderReport {
  int threshold = 0;
  int kmax = 0;
  EquilibriumBox box;
  int max_finite_order = 0;
  int max_order_outside_K = 0;
  int unresolved = 0;
  int unresolved_outside_K = 0;
  int violations = 0;  ///< states outside K with order > r or unresolved
  std::vector<OrderRow> rows;
};

/// Throws ThresholdViolation on the first violating state unless config.throw_on_violation is off.
OrderReport order_statistics(const ChainSpec& spec, const OrderConfig& config = {});

void write_order_csv(std::ostream& os, const OrderReport& rep, const Provenance* prov = nullptr);

std::string state_hash(const State& s);

}  // namespace lyapchain
