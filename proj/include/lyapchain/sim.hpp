#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lyapchain/chain.hpp"
#include "lyapchain/csv.hpp"
#include "lyapchain/jets.hpp"
#include "lyapchain/lyapunov_rotor.hpp"
#include "lyapchain/stats.hpp"

namespace lyapchain {

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> H;
  std::vector<double> W;            ///< empty unless coefficients were given
  std::vector<double> dissipated;   ///< running integral of sum_damped p_j^2
  std::vector<State> states;        ///< canonical states at the sample times (if kept)
  std::uint64_t seed = 0;           ///< stochastic runs
  std::string meta;                 ///< integrator settings, one line
  long steps = 0;
  double t_reached = 0.0;
  bool capped = false;              ///< stopped early by max_steps or the wall clock
  bool capped_by_clock = false;     ///< the only non-reproducible way to stop

  /// max_k |H_0 - H_k - D_k| / max(1, H_0).
  double ledger_error() const;
  /// Largest H_{k+1} - H_k, relative to max(1, H_0). At most the integrator tolerance for damped flows.
  double max_energy_increase() const;
};

struct IntegrateOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  int samples = 100;                   ///< uniform sample grid on [0, t_end] (plus t = 0)
  std::vector<double> sample_times;   ///< overrides `samples` when non-empty; ascending, within [0, t_end]
  std::optional<LyapCoeffs> coeffs;   ///< record W as well
  bool keep_states = true;
  long max_steps = 0;                 ///< 0: unlimited
  double wall_clock_seconds = 0.0;    ///< 0: unlimited
  double reduce_above = 64.0;         ///< rotators: fold q back to [0, 2pi) once some |q_j| exceeds this
};

/// Adaptive Dormand-Prince 5(4) with dense output. Throws StepUnderflow when the step drops
/// below 1e-14 t_end.
TrajectoryRecord integrate(const ChainSpec& spec, const State& s0, double t_end, const IntegrateOptions& options = {});

struct SdeOptions {
  int sample_every = 1;               ///< record every k-th step (the last step is always recorded)
  std::optional<LyapCoeffs> coeffs;
  bool keep_states = false;
};

/// One Euler-Maruyama step. `noise` holds a standard normal per particle; only damped particles with
/// positive temperature use theirs.
void euler_maruyama_step(const ChainSpec& spec, State& s, double dt, const std::vector<double>& noise);

/// Fixed-step Euler-Maruyama. Same seed, same bits.
TrajectoryRecord integrate_sde(const ChainSpec& spec, const State& s0, double t_end, double dt, std::uint64_t seed,
                               const SdeOptions& options = {});

std::vector<TrajectoryRecord> integrate_sde_ensemble(const ChainSpec& spec, const State& s0, double t_end, double dt,
                                                     const std::vector<std::uint64_t>& seeds,
                                                     const SdeOptions& options = {}, int threads = 1);

/// Observable for the generator check: value, plus the jet form used for L_F f and the
/// second momentum derivatives.
struct GeneratorTarget {
  std::string name;
  std::function<double(const State&)> value;
  Observable observable;

  static GeneratorTarget p1_squared();
  static GeneratorTarget energy(const ChainSpec& spec);
  static GeneratorTarget lyapunov(const ChainSpec& spec, const LyapCoeffs& c);
};

/// d^2 f / dp_j^2 at s, from a second-order jet along p_j -> p_j + t.
double second_p_derivative(const ChainSpec& spec, const Observable& f, const State& s, int j);

/// L f = L_F f + sum_j T_j d^2 f / dp_j^2.
double generator_analytic(const ChainSpec& spec, const GeneratorTarget& f, const State& s);

struct GeneratorConfig {
  std::vector<double> dts{4e-3, 2e-3, 1e-3};
  int ensemble = 100000;  ///< antithetic pairs; the same normals are reused for every dt
  std::uint64_t seed = 8;
  int threads = 1;
};

struct GeneratorRow {
  double dt = 0.0;
  double estimate = 0.0;  ///< (E f(X_dt) - f(s)) / dt
  double se = 0.0;
  double bias = 0.0;      ///< estimate - analytic
};

struct GenReport {
  std::string target;
  double analytic = 0.0;
  double lie = 0.0;        ///< L_F f
  double diffusion = 0.0;  ///< sum_j T_j d^2 f / dp_j^2
  double d2f_dp1 = 0.0;
  std::vector<GeneratorRow> rows;  ///< in the order of config.dts
  LinearFit bias_fit;              ///< bias against dt
  bool within_3se = false;         ///< at the finest dt
  bool bias_linear = false;        ///< R^2 >= 0.9
};

/// Report-only; never throws on disagreement.
GenReport generator_check(const ChainSpec& spec, const GeneratorTarget& f, const State& s,
                          const GeneratorConfig& config = {});

/// Terms of the bound L^{T1} W <= -H + C_1 + T_1 d^2W/dp_1^2 at one state.
struct GenWDecomposition {
  double H = 0.0;
  double lie_W = 0.0;
  double diffusion = 0.0;  ///< T_1 d^2W/dp_1^2
  double total = 0.0;      ///< lie_W + diffusion
  double bound = 0.0;      ///< -H + C_1 + diffusion
  double asymptotic = 0.0; ///< T_1 a_0 gamma_0 H^{gamma_0 - 1}
};
GenWDecomposition gen_w_decomposition(const ChainSpec& spec, const LyapCoeffs& c, const State& s);

enum class DecayFamily {
  FastRotator,   ///< all energy kinetic in particle N, random q
  SpreadEnergy,  ///< kinetic energy split evenly over all particles with random signs, random q
};
const char* to_string(DecayFamily f);
DecayFamily decay_family_from_string(const std::string& s);

/// Initial state with H = h0 exactly.
State decay_initial_state(const ChainSpec& spec, double h0, DecayFamily family, SplitMix64& rng);

struct DecayProtocol {
  std::vector<double> H0{1e2, 1e3, 1e4};
  std::vector<DecayFamily> families{DecayFamily::FastRotator};
  int ensemble = 16;
  double eps = 0.05;
  double rtol = 1e-12;
  double atol = 1e-12;
  int samples = 64;                   ///< log-spaced sample times up to the end of the run
  long max_steps = 20000000;          ///< per trajectory; deterministic cap
  double wall_clock_minutes = 120.0;  ///< whole scan; trajectories still running at the deadline stop
  std::optional<LyapCoeffs> coeffs;
  double confidence = 0.95;
  std::uint64_t seed = 9;
  int threads = 1;
};

struct DecayRow {
  double H0 = 0.0;
  DecayFamily family = DecayFamily::FastRotator;
  double window_lo = 0.0;  ///< eps^{-1} H0^{gamma0 - 5/2}
  double window_hi = 0.0;  ///< eps H0^{gamma0 - 1}
  bool window_empty = false;
  double t_end = 0.0;      ///< shortest run over the ensemble
  bool capped = false;
  bool capped_by_clock = false;
  int in_window_samples = 0;
  double rho = 0.0;        ///< ensemble mean of (H0 - H_t)/t at the last in-window time
  double rho_se = 0.0;
  double rho_min = 0.0;    ///< min over trajectories and in-window times
  double C_rho = 0.0;      ///< rho_min H0^{2N-3}
  double ledger_error = 0.0;
  bool W_monotone = true;  ///< only with coefficients
  double C_W = 0.0;        ///< min of (W_0 - W_t) / (t W_0^{1/gamma0})
};

struct DecayFamilyFit {
  DecayFamily family = DecayFamily::FastRotator;
  LinearFit fit;           ///< log rho against log H0 over rows with a non-empty window
  double predicted = 0.0;  ///< -(2N - 3)
  double C_fit = 0.0;      ///< largest C with rho_min >= C H0^{-(2N-3)} on every row
  bool bound_ok = false;   ///< C_fit > 0
  bool slope_in_range = false;  ///< slope in [predicted - 0.4, 0]
};

struct DecayReport {
  std::vector<DecayRow> rows;
  std::vector<DecayFamilyFit> fits;
  double wall_seconds = 0.0;
};

/// Needs a rotator spec and H0 values spanning at least 1.5 decades.
DecayReport decay_scan(const ChainSpec& spec, const DecayProtocol& protocol);

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec, const Provenance* prov = nullptr);
void write_generator_csv(std::ostream& os, const std::vector<GenReport>& reps, const Provenance* prov = nullptr);
void write_decay_csv(std::ostream& os, const DecayReport& rep, const Provenance* prov = nullptr);
void write_decay_fit_csv(std::ostream& os, const DecayReport& rep, const Provenance* prov = nullptr);

}  // namespace lyapchain
