#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "lyapchain/chain.hpp"
#include "lyapchain/csv.hpp"
#include "lyapchain/jets.hpp"
#include "lyapchain/sampling.hpp"
#include "lyapchain/stats.hpp"

namespace lyapchain {

/// Coefficients of
///   W = a_0 H^g0 - sum_{j<N} (a_{2j-1} H^{alpha_{2j-1}} p_j xi_j + a_{2j} H^{alpha_{2j}} xi_j L xi_j)
/// with g0 = 2N - 1 and alpha_k = 2(N-1) - k.
struct LyapCoeffs {
  int n = 2;
  std::vector<double> a;       ///< a_0 .. a_{2N-2}
  int gamma0 = 3;
  std::vector<int> alpha;      ///< alpha[k] = alpha_k for k = 1..2N-2; alpha[0] is unused (0)
  std::vector<double> Gamma;   ///< Gamma[j] = 2 a_{2j-1} / a_{2j}, j = 1..N-1; Gamma[0] unused
  double h0 = 1.0;             ///< energy above which the sandwich a0/2 H^g0 <= W <= 2 a0 H^g0 is certified
  double C1 = 0.0;             ///< L W <= -H + C1
  double C2 = 0.0;             ///< implied: L W <= -C2 W^{1/g0} + C1

  static LyapCoeffs make(int n, std::vector<double> a);

  /// a_k with the conventions a_{2N-1} = a_{2N} = 0.
  double coef(int k) const;
  /// H^{alpha_k}, with H^{alpha_0} = H^{alpha_{2N-1}} = H^{alpha_{2N}} = 0.
  double hpow(double h, int k, int shift = 0) const;

  /// Throws std::invalid_argument unless every a_k >= 1 and a_{2j-1} >= 2 a_{2j}.
  void check() const;
};

double eval_W(const ChainSpec& spec, const LyapCoeffs& c, const State& s);
Jet w_jet(const StateJet& sj, const LyapCoeffs& c);
Observable w_observable(const LyapCoeffs& c);

/// L_F W through the jet engine.
double lie_W(const ChainSpec& spec, const LyapCoeffs& c, const State& s);
/// L_F W from the hand-expanded formula (independent of the jet engine).
double lie_W_analytic(const ChainSpec& spec, const LyapCoeffs& c, const State& s);

/// Sup/inf constants of the interaction potentials used by the proof audit.
struct RotorConstants {
  double d1 = 0.0;  ///< max_j sup |V_j'|
  double d2 = 0.0;  ///< max_j sup |V_j''|
  double d3 = 0.0;  ///< max_j sup |V_j'''|
  double nu = 0.0;  ///< min_j inf (V_j')^2 + (V_j'')^2
  double c_l2 = 0.0;  ///< (L^2 xi_j)^2 <= c_l2 (p_j^4 + p_{j+1}^4 + neighbouring xi^2 + damped p^2)
};
RotorConstants rotor_constants(const ChainSpec& spec, int grid_points = 4096);

/// Terms of the proof decomposition L W <= -(I_p1 + I_xi + I_dxi + I_p) with concrete constants.
struct ProofTerms {
  double I_p1 = 0.0;
  double I_xi = 0.0;
  double I_dxi = 0.0;
  double I_dxi_scale = 0.0;  ///< magnitude of the two cancelling parts of I_dxi
  double I_p = 0.0;
};
ProofTerms proof_terms(const ChainSpec& spec, const LyapCoeffs& c, const RotorConstants& k, const State& s);

/// Energy floor above which the sandwich inequality holds, from sup bounds of the corrections.
double sandwich_floor(const LyapCoeffs& c, const RotorConstants& k);

struct CalibConfig {
  double seed = 10.0;    ///< a_{2N-2}
  double kappa = 8.0;
  double h_lo = 10.0;
  double h_hi = 1e4;
  int samples = 10000;   ///< per round, spread evenly over log H
  double growth = 4.0;
  int max_rounds = 6;
  int bins_per_decade = 4;
  double confidence = 0.95;
  int refine_top = 2;      ///< worst samples per energy bin refined by a local search on their level set
  int refine_steps = 400;
  double margin = 0.05;    ///< C1 = max + margin (|max| + 1)
  SamplingMeasure measure = SamplingMeasure::Mixed;
  std::vector<double> initial;  ///< if set, skip the construction and start from these a
  std::uint64_t rng_seed = 1;
  int threads = 1;
};

struct BinMax {
  double log10_h = 0.0;  ///< bin centre
  double max_value = 0.0;
  int count = 0;
};

struct CalibrationRound {
  std::vector<double> a;
  double max_value = 0.0;  ///< max of L W + H
  LinearFit fit;           ///< per-bin maxima vs log10 H
  bool slope_ok = false;
  int bumped_tier = -1;
  State worst;
  double worst_h = 0.0;
};

struct CalibrationReport {
  bool pass = false;
  std::string message;
  std::vector<CalibrationRound> rounds;
  std::vector<BinMax> bins;  ///< of the final round
};

struct CalibrationResult {
  LyapCoeffs coeffs;
  CalibrationReport report;
};

/// Constructive choice of a_{2N-2} .. a_0 from the seed under the proof constraints.
std::vector<double> construct_coeffs(int n, const RotorConstants& k, double seed, double kappa,
                                     int from_tier = -1, std::vector<double> a = {});

/// Report form: never throws on a failed search; report.pass says how it went.
CalibrationResult calibrate(const ChainSpec& spec, const CalibConfig& config);
/// Throws CalibrationFailed (message names the worst state) when the search is exhausted.
CalibrationResult calibrate_coeffs(const ChainSpec& spec, const CalibConfig& config);

struct VerifyConfig {
  int samples = 10000;
  double h_lo = 10.0;
  double h_hi = 1e4;
  int bins_per_decade = 4;
  double confidence = 0.95;
  SamplingMeasure measure = SamplingMeasure::KineticSimplex;
  std::uint64_t rng_seed = 2;
  int threads = 1;
};

struct VerifySample {
  State s;
  double h = 0.0, w = 0.0, lw = 0.0, lw_analytic = 0.0;
  ProofTerms terms;
  double pxi = 0.0;    ///< max_j |p_j xi_j| / sqrt(H)
  double xilxi = 0.0;  ///< max_j |xi_j L xi_j| / sqrt(H)
};

struct VerificationReport {
  int samples = 0;
  double max_lw_plus_h = 0.0;
  double C1 = 0.0;
  bool bound_ok = false;
  std::vector<BinMax> bins;
  LinearFit fit;
  bool slope_ok = false;

  double h0 = 0.0;
  double sandwich_min = 0.0;  ///< min W / (a0 H^g0) over samples with H >= h0
  double sandwich_max = 0.0;
  bool sandwich_ok = false;
  double sandwich_C = 0.0;    ///< max |W/(a0 H^g0) - 1| H^{3/2}
  double C2 = 0.0;

  double pxi_C = 0.0;
  double xilxi_C = 0.0;

  double dual_path_max_rel = 0.0;
  double dxi_max_rel = 0.0;   ///< max |I_dxi| / scale
  double xi_min = 0.0;        ///< min I_xi
  bool dxi_ok = false;
  bool xi_ok = false;
  double ip_C = 0.0;          ///< max of H - p1^2/2 - I_p, the constant in I_p >= H - C - p1^2/2
  double ip1_min_ratio = 0.0; ///< min of I_p1 / (H^{g0-1} p1^2 / 2) over samples with p1 != 0

  bool pass = false;
  std::vector<VerifySample> rows;
};

VerificationReport verify_theorem(const ChainSpec& spec, const LyapCoeffs& c, const VerifyConfig& config);

/// Per-bin maxima of values grouped by log10 H.
std::vector<BinMax> bin_maxima(const std::vector<double>& h, const std::vector<double>& v, double h_lo,
                               double h_hi, int bins_per_decade);

/// One row per calibration round (a, max, fit) followed by the final per-bin maxima.
void write_calibration_csv(std::ostream& os, const CalibrationReport& rep, const Provenance* prov = nullptr);
/// One row per sampled state.
void write_verification_csv(std::ostream& os, const VerificationReport& rep, const Provenance* prov = nullptr);
std::string summary(const CalibrationReport& rep);
std::string summary(const VerificationReport& rep);

}  // namespace lyapchain
