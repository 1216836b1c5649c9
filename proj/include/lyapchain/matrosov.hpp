#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lyapchain/chain.hpp"

namespace lyapchain {

/// Strict Lyapunov function built from the non-strict W = H,
///
///   W#(x) = chi(W) (A(W) - sum_{k=2}^r B_k(W) L^{k-1} W  L^k W),
///
/// with B_k = 2^{(r-k)(r-k+1)} (Phi^2 / phi)^{r-k} and A' dominating the error terms. All
/// functions of w live on a log grid in u = w - Q; phi, Phi and B_k are interpolated log-linearly
/// (linear in log u), A is piecewise linear with one slope per cell.
struct MatrosovData {
  int version = 1;
  int r = 7;
  double Q = 0.0;
  double eps = 0.1;
  double w_max = 100.0;
  int levels_per_decade = 64;
  std::string note;

  std::vector<double> w;      ///< grid levels, Q + eps/2 .. w_max
  std::vector<double> raw_m;  ///< sampled min of |L W| + sum_{k=2}^r |L^k W|^2
  std::vector<double> raw_M;  ///< sampled max of |L^k W|, k <= r + 1
  std::vector<double> phi;
  std::vector<double> Phi;
  std::vector<std::vector<double>> B;  ///< B[k][i] for k = 2..r; B[0], B[1] empty
  std::vector<double> A;               ///< A at the grid levels
  std::vector<double> A_slope;         ///< A' on cell [w_i, w_{i+1}]

  int cells() const { return static_cast<int>(w.size()) - 1; }
};

struct MatrosovConfig {
  int r = 0;  ///< 0: threshold from the validation of the potentials
  double Q = 0.0;
  double eps = 0.1;
  double w_max = 100.0;
  int levels_per_decade = 64;
  int samples_per_level = 100;  ///< spread over the level-set families
  double phi_safety = 0.5;
  double Phi_safety = 2.0;
  double derivative_inflation = 2.0;  ///< |B_k'| factor in the A' bound
  double degenerate_tol = 1e-12;      ///< m <= tol (M + M^2) counts as zero
  std::uint64_t seed = 5;
  int threads = 1;
};

/// Log grid of levels Q + u, u from eps/2 to w_max - Q.
std::vector<double> energy_grid(double Q, double eps, double w_max, int levels_per_decade);

struct Envelopes {
  std::vector<double> raw_m, raw_M, phi, Phi;
};

/// Level-set sampling of m(w) and M(w), then neighbour min/max over three levels, safety factors
/// and the clamp phi <= Phi^2. Throws EnvelopeDegenerate at the first level with m = 0.
Envelopes estimate_envelopes(const ChainSpec& spec, int r, const std::vector<double>& grid, const MatrosovConfig& config);

/// B_k from the closed form, and from B_r = 1, B_{r-1} = 4 Phi^2 / phi, B_{k-1} = 4 B_k^2 / B_{k+1}.
std::vector<std::vector<double>> b_tables_closed(const std::vector<double>& phi, const std::vector<double>& Phi, int r);
std::vector<std::vector<double>> b_tables_recursive(const std::vector<double>& phi, const std::vector<double>& Phi,
                                                    int r);

/// Fills A and A_slope from the B and envelope tables already present in data.
void build_A(MatrosovData& data, double derivative_inflation = 2.0);

/// Full pipeline: r, grid, envelopes, B tables, A.
MatrosovData build_matrosov(const ChainSpec& spec, const MatrosovConfig& config = {});

/// Empty when every tabulated invariant holds; otherwise a description of the first failure.
std::string check_tables(const MatrosovData& data);

/// Smoothstep cutoff: 0 below Q + eps/2, 1 above Q + eps.
double cutoff(const MatrosovData& data, double w, double* derivative = nullptr);

struct TableValue {
  double phi = 0.0, Phi = 0.0, A = 0.0, A_prime = 0.0;
  std::vector<double> B, B_prime;  ///< indexed by k
  bool extrapolated = false;       ///< w above w_max
};
TableValue lookup(const MatrosovData& data, double w);

double eval_Wsharp(const ChainSpec& spec, const MatrosovData& data, const State& s, bool* extrapolated = nullptr);
/// L_F W# from jet Lie derivatives of W up to order r + 1 and the grid-local derivatives of the tables.
double lie_Wsharp(const ChainSpec& spec, const MatrosovData& data, const State& s);

struct CertSample {
  State s;
  double w = 0.0;
  double lie = 0.0;     ///< L_F W#
  double margin = 0.0;  ///< L_F W# + phi(W) / 4
};

struct CertConfig {
  int samples = 10000;
  std::uint64_t seed = 6;
  int threads = 1;
  int keep_failures = 20;
};

struct CertReport {
  int samples = 0;
  int checked = 0;
  int excluded_band = 0;  ///< W in (Q + eps/2, Q + eps]: cutoff region, not checked
  int failures = 0;
  double max_margin = 0.0;
  double min_proper_gap = 0.0;  ///< min of W# - (W - Q - eps) over checked samples
  bool pass = false;
  std::vector<CertSample> failed;  ///< first few failures
  std::vector<CertSample> rows;
};

/// Statistical evidence only: the fresh samples come from the same families as the envelopes.
CertReport certify_strictness(const ChainSpec& spec, const MatrosovData& data, const CertConfig& config = {});

/// meta.txt (key = value) plus tables.csv; load inverts save bit for bit.
void save_matrosov(const MatrosovData& data, const std::filesystem::path& dir);
MatrosovData load_matrosov(const std::filesystem::path& dir);

}  // namespace lyapchain
