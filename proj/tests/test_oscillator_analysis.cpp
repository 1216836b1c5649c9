#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lyapchain/detail/random.hpp"
#include "lyapchain/errors.hpp"
#include "lyapchain/oscillator_analysis.hpp"
#include "oracles.hpp"

using namespace lyapchain;

namespace {

Potential half_square() { return Potential::polynomial({0, 0, 0.5}); }

ChainSpec quadratic(int n) {
  return ChainSpec::oscillator(std::vector<Potential>(n, half_square()), std::vector<Potential>(n - 1, half_square()));
}

ChainSpec two_well(int n) {
  return ChainSpec::oscillator(std::vector<Potential>(n, Potential::polynomial({0, 0, -1, 0, 1})),
                               std::vector<Potential>(n - 1, half_square()));
}

}  // namespace

TEST_CASE("validation classes") {
  const auto q2 = validate_oscillator_potentials(quadratic(2));
  CHECK(q2.pass);
  CHECK(q2.cls == OscillatorClass::StrictlyConvex);
  CHECK(q2.threshold == 7);
  CHECK(validate_oscillator_potentials(quadratic(3)).threshold == 11);

  const ChainSpec general = ChainSpec::oscillator(
      {Potential::polynomial({0, 0, 0, 0, 1}), Potential::polynomial({0, 0, 0, 0, 1})},
      {Potential::mixed({0, 0, 0.5}, {0.0}, {0.1})});
  const auto g = validate_oscillator_potentials(general);
  CHECK(g.pass);
  CHECK(g.cls == OscillatorClass::GeneralConvexAtInfinity);
  CHECK(g.threshold == 19);

  const ChainSpec line = ChainSpec::oscillator({half_square(), half_square()}, {Potential::polynomial({0, 1})});
  const auto l = validate_oscillator_potentials(line);
  CHECK_FALSE(l.pass);
  CHECK(l.cls == OscillatorClass::Invalid);

  const auto w = validate_oscillator_potentials(two_well(2));
  CHECK(w.pass);
  CHECK(w.cls == OscillatorClass::GeneralConvexAtInfinity);
}

TEST_CASE("convexity radius") {
  CHECK(*convexity_radius(half_square()) == doctest::Approx(0.0).epsilon(1e-9));
  // x^4 - 3x^2: f'' = 12x^2 - 6 vanishes at 1/sqrt(2)
  CHECK(*convexity_radius(Potential::polynomial({0, 0, -3, 0, 1})) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-8));
  CHECK_FALSE(convexity_radius(Potential::polynomial({0, 1})));
  CHECK_FALSE(convexity_radius(Potential::polynomial({0, 0, 0, 1})));
  // x^2/2 + cos(3x): f'' = 1 - 9 cos 3x, negative somewhere in every period
  CHECK_FALSE(convexity_radius(Potential::mixed({0, 0, 0.5}, {0, 0, 1}, {0, 0, 0})));
  // x^4 + cos x: f'' = 12x^2 - cos x, zero near 0.28288
  const double r = *convexity_radius(Potential::mixed({0, 0, 0, 0, 1}, {1}, {0}));
  CHECK(r >= 0.2828803);
  CHECK(r <= 0.2828803 + 1e-3);
}

TEST_CASE("residual") {
  const ChainSpec spec = quadratic(2);
  const std::vector<double> zero{0, 0}, e1{1, 0};
  const auto r0 = equilibrium_residual(spec, zero);
  CHECK(r0[0] == 0.0);
  CHECK(r0[1] == 0.0);
  const auto r1 = equilibrium_residual(spec, e1);
  CHECK(r1[0] == 2.0);
  CHECK(r1[1] == -1.0);

  const ChainSpec w = two_well(3);
  SplitMix64 rng(9);
  for (int i = 0; i < 50; ++i) {
    State s{{0, 0, 0}, {4 * rng.uniform() - 2, 4 * rng.uniform() - 2, 4 * rng.uniform() - 2}};
    const auto r = equilibrium_residual(w, s.q);
    const TangentVector f = vector_field(w, s);
    for (int k = 0; k < 3; ++k) CHECK(r[k] == doctest::Approx(-f.dp[k]).epsilon(1e-14));
  }
}

TEST_CASE("certified box") {
  const EquilibriumBox q = equilibrium_box(quadratic(2), 0.0);
  CHECK(q.M == doctest::Approx(1.0));
  CHECK(q.a == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(q.b == doctest::Approx(2.0).epsilon(1e-9));
  // 4x^3 - 2x = 2 at x = 1
  const EquilibriumBox w = equilibrium_box(two_well(2), 0.0);
  CHECK(w.a == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(w.b == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("strictly convex chains have the origin as only equilibrium") {
  for (int n = 2; n <= 3; ++n) {
    const EquilibriumResult r = find_equilibria(quadratic(n));
    REQUIRE(r.found);
    REQUIRE(r.roots.size() == 1);
    for (double x : r.roots[0]) CHECK(std::abs(x) <= 1e-10);
    CHECK(r.outside_box == 0);
  }
}

TEST_CASE("two-well roots agree with a grid scan") {
  const ChainSpec spec = two_well(2);
  const EquilibriumResult r = find_equilibria(spec);
  REQUIRE(r.found);
  CHECK(r.outside_box == 0);
  for (const auto& q : r.roots) {
    CHECK(q[0] > -r.box.b);
    CHECK(q[0] < r.box.a);
    CHECK(q[1] > -r.box.b);
    CHECK(q[1] < r.box.a);
    const auto res = equilibrium_residual(spec, q);
    CHECK(std::max(std::abs(res[0]), std::abs(res[1])) <= 1e-10);
  }
  const int cells = 400;
  const double h = (r.box.a + r.box.b) / cells;
  const auto grid = oracle::residual_minima_2d(spec, -r.box.b, r.box.a, cells);
  const auto close = [&](const std::vector<double>& x, const std::vector<double>& y) {
    return std::abs(x[0] - y[0]) <= 2 * h && std::abs(x[1] - y[1]) <= 2 * h;
  };
  for (const auto& q : r.roots) CHECK(std::any_of(grid.begin(), grid.end(), [&](const auto& c) { return close(c, q); }));
  for (const auto& c : grid)
    CHECK(std::any_of(r.roots.begin(), r.roots.end(), [&](const auto& q) { return close(c, q); }));
  // q_2 = 4 q_1^3 - q_1 and q_1 = 4 q_2^3 - q_2: the diagonal roots 0, +-1/sqrt 2 and nothing else real
  CHECK(r.roots.size() == 3);
}

TEST_CASE("order statistics on the quadratic chain") {
  OrderConfig cfg;
  cfg.samples = 600;
  const OrderReport rep = order_statistics(quadratic(2), cfg);
  CHECK(rep.threshold == 7);
  CHECK(rep.violations == 0);
  CHECK(rep.max_order_outside_K <= 7);
  for (const OrderRow& row : rep.rows) {
    if (row.family == 0) CHECK(row.order == 1);
    if (row.s.p[0] == 0.0 && row.s.p[1] == 0.0 && row.resolved) {
      // p = 0: H decays from order 2 ord(p_1) + 1 with ord(p_1) >= 1
      CHECK(row.order % 2 == 1);
      CHECK(row.order >= 3);
    }
  }
  std::ostringstream os;
  write_order_csv(os, rep);
  CHECK(os.str().rfind("state_hash,H,order,resolved,in_K\n", 0) == 0);
}

TEST_CASE("order cascade: ord(H) = 2 ord(p_1) + 1 on p = 0 slices") {
  const ChainSpec spec = quadratic(3);
  SplitMix64 rng(21);
  for (int i = 0; i < 100; ++i) {
    State s{{0, 0, 0}, {2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 2 * rng.uniform() - 1}};
    const OrderResult h = order_of(spec, s, Observable::energy(), 11);
    OrderOptions po;
    po.kmin = 0;
    const OrderResult p1 = order_of(spec, s, Observable::momentum(0), 11, po);
    REQUIRE(h.resolved);
    REQUIRE(p1.resolved);
    CHECK(h.order == 2 * p1.order + 1);
    CHECK(h.order <= 11);
  }
}

TEST_CASE("exact equilibrium is unresolved and sits in K") {
  const State s{{0, 0}, {0, 0}};
  CHECK_FALSE(order_of(quadratic(2), s, Observable::energy(), 7).resolved);
}

TEST_CASE("state hash is stable") {
  const State s{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(state_hash(s) == state_hash(State{{1.0, 2.0}, {3.0, 4.0}}));
  CHECK(state_hash(s) != state_hash(State{{1.0, 2.0}, {3.0, 4.5}}));
  CHECK(state_hash(s).size() == 16);
}
