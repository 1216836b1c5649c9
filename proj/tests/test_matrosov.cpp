#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lyapchain/detail/random.hpp"
#include "lyapchain/errors.hpp"
#include "lyapchain/jets.hpp"
#include "lyapchain/matrosov.hpp"
#include "oracles.hpp"

using namespace lyapchain;

namespace {

Potential half_square() { return Potential::polynomial({0, 0, 0.5}); }

ChainSpec quadratic(int n) {
  return ChainSpec::oscillator(std::vector<Potential>(n, half_square()), std::vector<Potential>(n - 1, half_square()));
}

// hand-made tables with moderate values, so W# itself stays finite-difference friendly
MatrosovData synthetic(int r) {
  MatrosovData d;
  d.r = r;
  d.Q = 0.0;
  d.eps = 0.1;
  d.w_max = 20.0;
  d.levels_per_decade = 16;
  d.w = energy_grid(d.Q, d.eps, d.w_max, d.levels_per_decade);
  for (double w : d.w) {
    d.raw_m.push_back(w);
    d.raw_M.push_back(1 + w);
    d.phi.push_back(0.5 * w);
    d.Phi.push_back(2 * (1 + w));
  }
  d.B = b_tables_closed(d.phi, d.Phi, r);
  build_A(d);
  return d;
}

State random_state(SplitMix64& rng, int n, double scale) {
  State s{std::vector<double>(n), std::vector<double>(n)};
  for (int j = 0; j < n; ++j) {
    s.q[j] = scale * (2 * rng.uniform() - 1);
    s.p[j] = scale * (2 * rng.uniform() - 1);
  }
  return s;
}

// log-linear interpolation written out again, independent of lookup()
double interp(const MatrosovData& d, const std::vector<double>& f, double w) {
  std::size_t i = 0;
  while (i + 2 < d.w.size() && d.w[i + 1] <= w) ++i;
  const double t = std::log((w - d.Q) / (d.w[i] - d.Q)) / std::log((d.w[i + 1] - d.Q) / (d.w[i] - d.Q));
  return f[i] * std::pow(f[i + 1] / f[i], t);
}

}  // namespace

TEST_CASE("grid") {
  const auto g = energy_grid(0.0, 0.1, 100.0, 64);
  CHECK(g.front() == doctest::Approx(0.05));
  CHECK(g.back() == doctest::Approx(100.0));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  CHECK(g.size() >= static_cast<std::size_t>(64 * std::log10(100.0 / 0.05)));
}

TEST_CASE("B tables: closed form against the recursion") {
  // Phi^2 / phi = 1
  const std::vector<double> phi{1.0, 4.0}, Phi{1.0, 2.0};
  const auto closed = b_tables_closed(phi, Phi, 4);
  const auto rec = b_tables_recursive(phi, Phi, 4);
  for (int i = 0; i < 2; ++i) {
    CHECK(closed[4][i] == 1.0);
    CHECK(closed[3][i] == 4.0);
    CHECK(closed[2][i] == 64.0);
  }
  SplitMix64 rng(12);
  for (int r = 3; r <= 11; ++r) {
    std::vector<double> a(20), b(20);
    for (int i = 0; i < 20; ++i) {
      b[i] = 0.5 + 2 * rng.uniform();
      a[i] = b[i] * b[i] * (0.1 + 0.9 * rng.uniform());
    }
    const auto c = b_tables_closed(a, b, r);
    const auto q = b_tables_recursive(a, b, r);
    for (int k = 2; k <= r; ++k)
      for (int i = 0; i < 20; ++i) CHECK(std::abs(c[k][i] - q[k][i]) <= 1e-12 * c[k][i]);
  }
}

TEST_CASE("A dominates its bound and satisfies the table invariants") {
  MatrosovData d = synthetic(4);
  CHECK(check_tables(d).empty());
  for (int i = 0; i < d.cells(); ++i) {
    // B_2 Phi >= 2^6 * (Phi^2/phi)^2 * Phi on every cell
    const double floor = std::min(d.B[2][i] * d.Phi[i], d.B[2][i + 1] * d.Phi[i + 1]) + 1;
    CHECK(d.A_slope[i] > floor);
    CHECK(d.A[i + 1] >= d.A[i]);
  }
  // constant envelopes: A' >= 1 + 2^{(r-2)(r-1)} + 1 with Phi = phi = 1
  MatrosovData c = d;
  std::fill(c.phi.begin(), c.phi.end(), 1.0);
  std::fill(c.Phi.begin(), c.Phi.end(), 1.0);
  c.B = b_tables_closed(c.phi, c.Phi, c.r);
  build_A(c);
  for (double s : c.A_slope) CHECK(s >= 64.0 + 2.0);

  MatrosovData bad = d;
  bad.A_slope[3] = -1.0;
  CHECK_FALSE(check_tables(bad).empty());
}

TEST_CASE("envelope clamp and safety factors") {
  MatrosovConfig cfg;
  cfg.w_max = 5.0;
  cfg.levels_per_decade = 8;
  cfg.samples_per_level = 20;
  const ChainSpec spec = quadratic(2);
  const auto grid = energy_grid(cfg.Q, cfg.eps, cfg.w_max, cfg.levels_per_decade);
  const Envelopes e = estimate_envelopes(spec, 7, grid, cfg);
  REQUIRE(e.phi.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(e.phi[i] > 0);
    CHECK(e.phi[i] <= e.Phi[i] * e.Phi[i]);
    CHECK(e.phi[i] <= e.raw_m[i]);
    CHECK(e.Phi[i] >= e.raw_M[i]);
  }
}

TEST_CASE("cutoff") {
  const MatrosovData d = synthetic(3);
  const ChainSpec spec = quadratic(2);
  CHECK(cutoff(d, 0.0) == 0.0);
  CHECK(cutoff(d, 0.05) == 0.0);
  CHECK(cutoff(d, 0.1) == 1.0);
  CHECK(cutoff(d, 0.075) == doctest::Approx(0.5));
  // W <= Q + eps/2 gives exactly zero
  const State low{{0.1, 0.0}, {0.1, 0.0}};
  REQUIRE(energy(spec, low) < 0.05);
  CHECK(eval_Wsharp(spec, d, low) == 0.0);
  CHECK(lie_Wsharp(spec, d, low) == 0.0);
}

TEST_CASE("W# re-evaluated from the raw tables") {
  const MatrosovData d = synthetic(5);
  const ChainSpec spec = quadratic(2);
  SplitMix64 rng(31);
  int seen = 0;
  for (int t = 0; t < 300; ++t) {
    const State s = random_state(rng, 2, 3.0);
    const double w = energy(spec, s);
    if (w <= d.Q + d.eps || w >= d.w_max) continue;
    ++seen;
    std::size_t i = 0;
    while (i + 2 < d.w.size() && d.w[i + 1] <= w) ++i;
    double raw = d.A[i] + d.A_slope[i] * (w - d.w[i]);
    const LieResult L = lie_derivatives(spec, s, Observable::energy(), d.r);
    for (int k = 2; k <= d.r; ++k) raw -= interp(d, d.B[k], w) * L.values[k - 1] * L.values[k];
    CHECK(eval_Wsharp(spec, d, s) == doctest::Approx(raw).epsilon(1e-9));
  }
  CHECK(seen > 100);
}

TEST_CASE("L W# matches a finite difference along the flow") {
  const MatrosovData d = synthetic(4);
  const ChainSpec spec = quadratic(2);
  SplitMix64 rng(32);
  const double dt = 1e-4;
  int seen = 0;
  for (int t = 0; t < 400; ++t) {
    const State s = random_state(rng, 2, 2.5);
    const double w = energy(spec, s);
    if (w <= d.Q + d.eps / 2 || w >= d.w_max) continue;
    // the one-sided slopes of A differ at the nodes; skip states that straddle one
    const double dw = 4 * dt * std::abs(energy_lie_derivatives(spec, s, 1).values[1]);
    bool near_node = false;
    for (double x : d.w) near_node = near_node || std::abs(x - w) <= dw;
    if (near_node) continue;
    ++seen;
    const auto central = [&](double h) {
      return (eval_Wsharp(spec, d, oracle::rk4(spec, s, h)) - eval_Wsharp(spec, d, oracle::rk4(spec, s, -h))) / (2 * h);
    };
    // Richardson step removes the dt^2 term
    const double fd = (4 * central(dt / 2) - central(dt)) / 3;
    const double an = lie_Wsharp(spec, d, s);
    CHECK(std::abs(fd - an) <= 1e-5 * (1 + std::abs(an)));
  }
  CHECK(seen > 100);
}

TEST_CASE("certification on the quadratic chain, with a corrupted-phi control") {
  const ChainSpec spec = quadratic(2);
  const MatrosovData d = build_matrosov(spec);
  CHECK(d.r == 7);
  CHECK(check_tables(d).empty());
  CertConfig cc;
  cc.samples = 2000;
  const CertReport rep = certify_strictness(spec, d, cc);
  CHECK(rep.pass);
  CHECK(rep.failures == 0);
  CHECK(rep.checked + rep.excluded_band == rep.samples);
  CHECK(rep.max_margin <= 0);
  CHECK(rep.min_proper_gap >= 0);

  MatrosovData bad = d;
  for (double& x : bad.phi) x *= 100;
  const CertReport neg = certify_strictness(spec, bad, cc);
  CHECK_FALSE(neg.pass);
  CHECK(neg.failures > 0);
  CHECK_FALSE(neg.failed.empty());
}

TEST_CASE("a free first particle makes the envelope degenerate") {
  // V_1 = 0: with p_1 = 0 and q_1 = 0 particle 1 never moves, so every L^k H vanishes
  const ChainSpec spec = ChainSpec::oscillator({half_square(), half_square()}, {Potential::polynomial({0})});
  MatrosovConfig cfg;
  cfg.r = 7;
  cfg.w_max = 5.0;
  cfg.levels_per_decade = 8;
  cfg.samples_per_level = 20;
  CHECK_THROWS_AS(build_matrosov(spec, cfg), EnvelopeDegenerate);
}

TEST_CASE("save and load round-trip") {
  MatrosovConfig cfg;
  cfg.w_max = 10.0;
  cfg.levels_per_decade = 16;
  cfg.samples_per_level = 20;
  const MatrosovData d = build_matrosov(quadratic(2), cfg);
  const auto dir = std::filesystem::temp_directory_path() / "lyapchain_matrosov_roundtrip";
  std::filesystem::remove_all(dir);
  save_matrosov(d, dir);
  const MatrosovData e = load_matrosov(dir);
  CHECK(e.r == d.r);
  CHECK(e.note == d.note);
  CHECK(e.w == d.w);
  CHECK(e.phi == d.phi);
  CHECK(e.Phi == d.Phi);
  CHECK(e.A == d.A);
  CHECK(e.A_slope == d.A_slope);
  for (int k = 2; k <= d.r; ++k) CHECK(e.B[k] == d.B[k]);
  std::filesystem::remove_all(dir);
}
