#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lyapchain/chain.hpp"
#include "lyapchain/detail/random.hpp"

namespace lyapchain {

enum class SamplingMeasure {
  MomentumSphere,  ///< q uniform, p uniform on the sphere |p|^2 = 2 (H - U(q))
  KineticSimplex,  ///< q uniform, kinetic energy split uniformly at random over particles
  Mixed,           ///< alternate the two
};

const char* to_string(SamplingMeasure m);
SamplingMeasure sampling_measure_from_string(const std::string& s);

double standard_normal(SplitMix64& rng);

/// Rotator state with H = h exactly; retries q until the potential leaves room for kinetic
/// energy. `index` picks the branch of the Mixed measure.
State sample_rotor_state(const ChainSpec& spec, double h, SamplingMeasure measure, SplitMix64& rng,
                         std::size_t index = 0);

/// State families for level-set sampling of oscillator chains (and rotators where it makes sense).
enum class LevelFamily {
  Generic,          ///< random q and p with a random kinetic share
  P1Zero,           ///< p_1 = 0
  PZero,            ///< p = 0, all energy potential
  FirstForceFree,   ///< p_1 = 0 and q_1 solves the first equilibrium equation
  DegenerateCurve,  ///< p = 0 and the first N-1 equilibrium equations hold
};

inline constexpr LevelFamily kLevelFamilies[] = {LevelFamily::Generic, LevelFamily::P1Zero, LevelFamily::PZero,
                                                 LevelFamily::FirstForceFree, LevelFamily::DegenerateCurve};

const char* to_string(LevelFamily f);

struct LevelSampler {
  ChainSpec spec;
  std::vector<double> base_q;  ///< a minimiser of the potential; rays start here
  double base_u = 0.0;         ///< U(base_q)

  explicit LevelSampler(const ChainSpec& spec);

  /// State of the family with H(s) = w, by a q-ray bisection for the potential share followed by
  /// root finding along a momentum ray. Empty when the family has no member at this level.
  std::optional<State> sample(double w, LevelFamily family, SplitMix64& rng) const;

  /// Point t * dir + base_q with U = target, by bisection in t > 0.
  std::optional<std::vector<double>> q_on_level(const std::vector<double>& dir, double target) const;
};

/// Solves the first `count` equilibrium equations for q_2, q_3, ... given q_1 (1-D bracketing
/// per equation). Returns false when an equation has no sign change in the search range.
bool solve_equilibrium_prefix(const ChainSpec& spec, std::vector<double>& q, int count);

}  // namespace lyapchain
