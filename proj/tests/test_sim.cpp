#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "lyapchain/detail/random.hpp"
#include "lyapchain/errors.hpp"
#include "lyapchain/sim.hpp"
#include "lyapchain/stats.hpp"

using namespace lyapchain;

namespace {

ChainSpec cos_rotor(int n) { return ChainSpec::rotator(std::vector<Potential>(n - 1, Potential::trig(2.0, {1.0}))); }

// the pinned N = 2 calibration
LyapCoeffs pinned() {
  LyapCoeffs c = LyapCoeffs::make(2, {512000, 800, 10});
  c.C1 = -223.678;
  c.h0 = 1.0;
  return c;
}

}  // namespace

TEST_CASE("undamped harmonic oscillator returns after one period") {
  // two uncoupled unit oscillators, no damping
  ChainSpec spec = ChainSpec::oscillator({Potential::polynomial({0, 0, 0.5}), Potential::polynomial({0, 0, 0.5})},
                                         {Potential::polynomial({0})});
  spec.damping = {false, false};
  spec.temperatures = {0, 0};
  const State s0{{0.3, 0.0}, {1.0, -2.0}};
  const TrajectoryRecord r = integrate(spec, s0, 2 * std::numbers::pi);
  const State& s = r.states.back();
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(s.p[j] - s0.p[j]) <= 1e-8);
    CHECK(std::abs(s.q[j] - s0.q[j]) <= 1e-8);
  }
  CHECK(r.dissipated.back() == 0.0);
}

TEST_CASE("damped rotator: energy decreases and the ledger closes") {
  const ChainSpec spec = cos_rotor(2);
  SplitMix64 rng(3);
  const State s0 = decay_initial_state(spec, 100.0, DecayFamily::SpreadEnergy, rng);
  IntegrateOptions opt;
  opt.samples = 200;
  const TrajectoryRecord r = integrate(spec, s0, 50.0, opt);
  CHECK(r.H.front() == doctest::Approx(100.0));
  for (std::size_t k = 1; k < r.H.size(); ++k) CHECK(r.H[k] < r.H[k - 1]);
  CHECK(r.ledger_error() <= 1e-6);
  CHECK(r.max_energy_increase() <= 0.0);
  for (const State& s : r.states)
    for (double q : s.q) {
      CHECK(q >= 0.0);
      CHECK(q < 2 * std::numbers::pi);
    }
}

TEST_CASE("equilibrium start stays put") {
  const ChainSpec spec = cos_rotor(3);
  const State s0{{0, 0, 0}, {0, 0, 0}};
  const TrajectoryRecord r = integrate(spec, s0, 10.0);
  for (const State& s : r.states) {
    for (double p : s.p) CHECK(p == 0.0);
    for (double q : s.q) CHECK(q == 0.0);
  }
}

TEST_CASE("unreachable tolerance underflows the step") {
  const ChainSpec spec = cos_rotor(2);
  IntegrateOptions opt;
  opt.rtol = opt.atol = 1e-30;
  CHECK_THROWS_AS(integrate(spec, State{{3.0, -1.0}, {0.5, 2.0}}, 10.0, opt), StepUnderflow);
}

TEST_CASE("step cap stops early and records the last state") {
  const ChainSpec spec = cos_rotor(2);
  IntegrateOptions opt;
  opt.max_steps = 50;
  const TrajectoryRecord r = integrate(spec, State{{3.0, -1.0}, {0.5, 2.0}}, 100.0, opt);
  CHECK(r.capped);
  CHECK_FALSE(r.capped_by_clock);
  CHECK(r.steps == 50);
  CHECK(r.times.back() == r.t_reached);
  CHECK(r.t_reached < 100.0);
}

TEST_CASE("zero temperature Euler-Maruyama converges to the deterministic flow at order one") {
  const ChainSpec spec = cos_rotor(2);
  const State s0{{1.5, -0.5}, {0.2, 1.0}};
  IntegrateOptions opt;
  opt.samples = 1;
  const State ref = integrate(spec, s0, 1.0, opt).states.back();
  double err[2];
  const double dts[2] = {2e-3, 1e-3};
  for (int i = 0; i < 2; ++i) {
    SdeOptions so;
    so.keep_states = true;
    const State s = integrate_sde(spec, s0, 1.0, dts[i], 1, so).states.back();
    err[i] = 0;
    for (int j = 0; j < 2; ++j) err[i] = std::max({err[i], std::abs(s.p[j] - ref.p[j]), std::abs(s.q[j] - ref.q[j])});
  }
  CHECK(err[1] < 1e-2);
  CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("free damped particle has the Ornstein-Uhlenbeck variance") {
  ChainSpec spec = ChainSpec::rotator({Potential::trig(2.0, {0.0})});
  spec.temperatures = {1.0, 0.0};
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < 2000; ++i) seeds.push_back(stream_seed(77, i));
  SdeOptions so;
  so.sample_every = 1000;
  so.keep_states = true;
  const auto runs = integrate_sde_ensemble(spec, State{{0, 0}, {0, 0}}, 10.0, 0.01, seeds, so, 4);
  std::vector<double> p2;
  for (const auto& r : runs) p2.push_back(r.states.back().p[0] * r.states.back().p[0]);
  // E p^2 = T up to the e^{-20} transient and the O(dt) bias of the scheme
  CHECK(std::abs(mean(p2) - 1.0) <= 3 * standard_error(p2));
}

TEST_CASE("same seed, same bits") {
  ChainSpec spec = cos_rotor(3);
  spec.damping = {true, false, true};
  spec.temperatures = {1.0, 0.0, 0.5};
  const State s0{{1, 0, -1}, {0, 1, 2}};
  SdeOptions so;
  so.keep_states = true;
  so.sample_every = 10;
  const auto a = integrate_sde(spec, s0, 5.0, 1e-3, 42, so);
  const auto b = integrate_sde(spec, s0, 5.0, 1e-3, 42, so);
  const auto c = integrate_sde(spec, s0, 5.0, 1e-3, 43, so);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(a.states[k].p == b.states[k].p);
    CHECK(a.states[k].q == b.states[k].q);
  }
  CHECK(a.H == b.H);
  CHECK(a.H.back() != c.H.back());
  std::ostringstream x, y;
  write_trajectory_csv(x, a);
  write_trajectory_csv(y, b);
  CHECK(x.str() == y.str());
}

TEST_CASE("second momentum derivatives") {
  const ChainSpec spec = cos_rotor(2);
  const State s{{0.7, -1.2}, {0.3, 2.0}};
  CHECK(second_p_derivative(spec, Observable::energy(), s, 0) == doctest::Approx(1.0));
  CHECK(second_p_derivative(spec, Observable::momentum_squared(0), s, 0) == doctest::Approx(2.0));
  CHECK(second_p_derivative(spec, Observable::momentum_squared(0), s, 1) == 0.0);
  const LyapCoeffs c = pinned();
  const double h = 1e-3;
  State a = s, b = s;
  a.p[0] += h;
  b.p[0] -= h;
  const double fd = (eval_W(spec, c, a) - 2 * eval_W(spec, c, s) + eval_W(spec, c, b)) / (h * h);
  CHECK(second_p_derivative(spec, w_observable(c), s, 0) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("generator of p1^2 at p1 = 0, xi_1 = 0 is 2 T_1") {
  ChainSpec spec = cos_rotor(2);
  spec.temperatures = {1.0, 0.0};
  const State s{{0.0, 0.5}, {0.0, 0.0}};
  const GeneratorTarget f = GeneratorTarget::p1_squared();
  CHECK(generator_analytic(spec, f, s) == doctest::Approx(2.0).epsilon(1e-14));
  GeneratorConfig cfg;
  cfg.ensemble = 20000;
  cfg.threads = 4;
  const GenReport rep = generator_check(spec, f, s, cfg);
  CHECK(rep.lie == 0.0);
  CHECK(rep.within_3se);
}

TEST_CASE("zero temperature: generator is the Lie derivative") {
  const ChainSpec spec = cos_rotor(2);
  const State s{{0.7, -1.2}, {0.3, 2.0}};
  for (const GeneratorTarget& f : {GeneratorTarget::p1_squared(), GeneratorTarget::energy(spec)}) {
    GeneratorConfig cfg;
    cfg.ensemble = 10;
    const GenReport rep = generator_check(spec, f, s, cfg);
    CHECK(rep.diffusion == 0.0);
    CHECK(rep.analytic == rep.lie);
    // no noise: the one-step estimate differs from L_F f by O(dt) only
    CHECK(rep.bias_fit.r2 >= 0.9);
    CHECK(std::abs(rep.rows.back().bias) <= 1e-2 * (1 + std::abs(rep.analytic)));
  }
}

TEST_CASE("generator estimates are first-order accurate for H and W") {
  ChainSpec spec = cos_rotor(2);
  spec.temperatures = {1.0, 0.0};
  const State s{{0.8, -1.5}, {0.4, 1.9}};
  GeneratorConfig cfg;
  cfg.ensemble = 40000;
  cfg.threads = 4;
  for (const GeneratorTarget& f : {GeneratorTarget::energy(spec), GeneratorTarget::lyapunov(spec, pinned())}) {
    const GenReport rep = generator_check(spec, f, s, cfg);
    CAPTURE(f.name);
    CHECK(rep.bias_linear);
    CHECK(rep.within_3se);
  }
}

TEST_CASE("W is not a Lyapunov function for the thermostatted generator") {
  ChainSpec spec = cos_rotor(2);
  spec.temperatures = {1.0, 0.0};
  const LyapCoeffs c = pinned();
  SplitMix64 rng(5);
  for (int i = 0; i < 20; ++i) {
    // p_1 = 0: L_F W is only about -H, the diffusion term is of order a_0 gamma_0 H^2
    const State s = decay_initial_state(spec, 1e3, DecayFamily::FastRotator, rng);
    const GenWDecomposition d = gen_w_decomposition(spec, c, s);
    CHECK(d.lie_W < 0);
    CHECK(d.total > 0);
    CHECK(d.bound >= d.total);
    CHECK(d.diffusion / d.asymptotic == doctest::Approx(1.0).epsilon(0.01));
  }
  for (int i = 0; i < 20; ++i) {
    // away from p_1 = 0 the bound is still positive, and d^2W/dp_1^2 = a_0 gamma_0 H^2 (1 + 2 p_1^2 / H) + ...
    const State s = decay_initial_state(spec, 1e3, DecayFamily::SpreadEnergy, rng);
    const GenWDecomposition d = gen_w_decomposition(spec, c, s);
    CHECK(d.bound > 0);
    CHECK(d.bound >= d.total);
    const double ratio = d.diffusion / d.asymptotic;
    CHECK(ratio == doctest::Approx(1 + 2 * s.p[0] * s.p[0] / d.H).epsilon(0.01));
  }
}

TEST_CASE("decay scan on a small ensemble") {
  const ChainSpec spec = cos_rotor(2);
  DecayProtocol pr;
  pr.H0 = {1e2, 3.2e3};
  pr.ensemble = 2;
  pr.max_steps = 4000000;
  pr.threads = 4;
  pr.coeffs = pinned();
  const DecayReport rep = decay_scan(spec, pr);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].window_lo == doctest::Approx(200.0));
  CHECK(rep.rows[0].window_hi == doctest::Approx(500.0));
  CHECK_FALSE(rep.rows[0].capped);
  CHECK(rep.rows[1].capped);
  for (const DecayRow& r : rep.rows) {
    CHECK(r.in_window_samples > 0);
    CHECK(r.ledger_error <= 1e-6);
    // averaging predicts rho ~ 1 / (4 H0) for a single fast rotator
    CHECK(r.rho * r.H0 == doctest::Approx(0.25).epsilon(0.05));
    CHECK(r.W_monotone);
    CHECK(r.C_W > 0);
  }
  REQUIRE(rep.fits.size() == 1);
  CHECK(rep.fits[0].bound_ok);
  CHECK(rep.fits[0].slope_in_range);
  CHECK(rep.fits[0].fit.slope == doctest::Approx(-1.0).epsilon(0.05));

  std::ostringstream os;
  write_decay_csv(os, rep);
  CHECK(os.str().rfind("H0,family,window_lo,window_hi", 0) == 0);
}

TEST_CASE("empty windows are reported, not integrated") {
  const ChainSpec spec = cos_rotor(2);
  DecayProtocol pr;
  pr.eps = 1e-3;  // empty below H0 = eps^{-4/3} = 1e4
  pr.H0 = {1e2, 3.2e3};
  const DecayReport rep = decay_scan(spec, pr);
  for (const DecayRow& r : rep.rows) {
    CHECK(r.window_empty);
    CHECK(std::isnan(r.rho));
  }
  CHECK_FALSE(rep.fits[0].bound_ok);
  pr.H0 = {1e2, 5e2};
  CHECK_THROWS_AS(decay_scan(spec, pr), std::invalid_argument);
}
