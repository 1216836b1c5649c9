#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "lyapchain/chain.hpp"
#include "lyapchain/errors.hpp"
#include "lyapchain/jets.hpp"
#include "lyapchain/lyapunov_rotor.hpp"
#include "lyapchain/oscillator_analysis.hpp"
#include "lyapchain/potentials.hpp"
#include "lyapchain/sim.hpp"

namespace py = pybind11;
using namespace lyapchain;

namespace {

State make_state(std::vector<double> p, std::vector<double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("p and q need the same length");
  return State{std::move(p), std::move(q)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lyapunov functions and energy decay for damped rotor and oscillator chains";

  py::register_exception<ReportFailure>(m, "ReportFailure", PyExc_RuntimeError);
  py::register_exception<StepUnderflow>(m, "StepUnderflow", PyExc_RuntimeError);

  py::class_<Potential>(m, "Potential")
      .def_static("trig", &Potential::trig, py::arg("c0"), py::arg("cos"), py::arg("sin") = std::vector<double>{})
      .def_static("polynomial", &Potential::polynomial, py::arg("coeffs"))
      .def_static("mixed", &Potential::mixed, py::arg("poly"), py::arg("cos"), py::arg("sin") = std::vector<double>{})
      .def("__call__", &Potential::eval, py::arg("x"), py::arg("order") = 0)
      .def_property_readonly("shift", &Potential::shift)
      .def("normalized", [](const Potential& p) { return normalize_rotor_potential(p); });

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_readonly("passed", &ValidationReport::pass)
      .def_readonly("message", &ValidationReport::message)
      .def_readonly("min_nondegeneracy", &ValidationReport::min_nondegeneracy)
      .def_readonly("min_value", &ValidationReport::min_value)
      .def_readonly("shift", &ValidationReport::shift);
  m.def("validate_rotor_potential", [](const Potential& p) { return validate_rotor_potential(p); });

  py::class_<State>(m, "State")
      .def(py::init(&make_state), py::arg("p"), py::arg("q"))
      .def_readwrite("p", &State::p)
      .def_readwrite("q", &State::q)
      .def("__repr__", [](const State& s) {
        std::ostringstream os;
        os << "State(p=[";
        for (std::size_t i = 0; i < s.p.size(); ++i) os << (i ? ", " : "") << s.p[i];
        os << "], q=[";
        for (std::size_t i = 0; i < s.q.size(); ++i) os << (i ? ", " : "") << s.q[i];
        os << "])";
        return os.str();
      });

  py::class_<ChainSpec>(m, "ChainSpec")
      .def_static("rotator", &ChainSpec::rotator, py::arg("interaction"))
      .def_static("oscillator", &ChainSpec::oscillator, py::arg("pinning"), py::arg("interaction"))
      .def_readonly("n", &ChainSpec::n)
      .def_property_readonly("is_rotator", [](const ChainSpec& s) { return s.kind == ChainKind::Rotator; })
      .def_readwrite("damping", &ChainSpec::damping)
      .def_readwrite("temperatures", &ChainSpec::temperatures)
      .def("check", &ChainSpec::check);

  m.def("energy", &energy);
  m.def("dissipation", &dissipation);
  m.def("lie_energy", &lie_energy_analytic, "grad H . F from the explicit gradient");
  m.def(
      "energy_lie_derivatives",
      [](const ChainSpec& spec, const State& s, int kmax) { return energy_lie_derivatives(spec, s, kmax).values; },
      py::arg("spec"), py::arg("state"), py::arg("kmax"));

  py::class_<LyapCoeffs>(m, "LyapCoeffs")
      .def(py::init([](std::vector<double> a, double C1, double h0) {
             const int n = static_cast<int>(a.size() + 1) / 2;
             LyapCoeffs c = LyapCoeffs::make(n, std::move(a));
             c.C1 = C1;
             c.h0 = h0;
             return c;
           }),
           py::arg("a"), py::arg("C1") = 0.0, py::arg("h0") = 1.0)
      .def_readonly("n", &LyapCoeffs::n)
      .def_readonly("a", &LyapCoeffs::a)
      .def_readwrite("C1", &LyapCoeffs::C1)
      .def_readwrite("h0", &LyapCoeffs::h0);
  m.def("W", &eval_W, py::arg("spec"), py::arg("coeffs"), py::arg("state"));
  m.def("lie_W", &lie_W, py::arg("spec"), py::arg("coeffs"), py::arg("state"));
  m.def(
      "W_lie_derivatives",
      [](const ChainSpec& spec, const LyapCoeffs& c, const State& s, int kmax) {
        return lie_derivatives(spec, s, w_observable(c), kmax).values;
      },
      py::arg("spec"), py::arg("coeffs"), py::arg("state"), py::arg("kmax"));

  m.def(
      "calibrate",
      [](const ChainSpec& spec, std::uint64_t rng_seed, int samples, int max_rounds) {
        CalibConfig cc;
        cc.rng_seed = rng_seed;
        cc.samples = samples;
        cc.max_rounds = max_rounds;
        const CalibrationResult r = calibrate(spec, cc);
        return py::make_tuple(r.report.pass, r.coeffs, summary(r.report));
      },
      py::arg("spec"), py::arg("rng_seed") = 1, py::arg("samples") = 10000, py::arg("max_rounds") = 6,
      "returns (passed, coeffs, summary)");
  m.def(
      "verify",
      [](const ChainSpec& spec, const LyapCoeffs& c, std::uint64_t rng_seed, int samples) {
        VerifyConfig vc;
        vc.rng_seed = rng_seed;
        vc.samples = samples;
        const VerificationReport r = verify_theorem(spec, c, vc);
        return py::make_tuple(r.pass, r.max_lw_plus_h, summary(r));
      },
      py::arg("spec"), py::arg("coeffs"), py::arg("rng_seed") = 2, py::arg("samples") = 10000,
      "returns (passed, max of L W + H, summary)");

  m.def(
      "integrate",
      [](const ChainSpec& spec, const State& s0, double t_end, int samples, double rtol, long max_steps) {
        IntegrateOptions o;
        o.samples = samples;
        o.rtol = o.atol = rtol;
        o.max_steps = max_steps;
        o.keep_states = false;
        TrajectoryRecord r;
        {
          py::gil_scoped_release nogil;
          r = integrate(spec, s0, t_end, o);
        }
        py::dict d;
        d["t"] = r.times;
        d["H"] = r.H;
        d["dissipated"] = r.dissipated;
        d["steps"] = r.steps;
        d["capped"] = r.capped;
        d["ledger_error"] = r.ledger_error();
        return d;
      },
      py::arg("spec"), py::arg("state"), py::arg("t_end"), py::arg("samples") = 100, py::arg("rtol") = 1e-10,
      py::arg("max_steps") = 0, "dopri5 trajectory as a dict of lists");
  m.def(
      "integrate_sde",
      [](const ChainSpec& spec, const State& s0, double t_end, double dt, std::uint64_t seed, int sample_every) {
        SdeOptions o;
        o.sample_every = sample_every;
        const TrajectoryRecord r = integrate_sde(spec, s0, t_end, dt, seed, o);
        py::dict d;
        d["t"] = r.times;
        d["H"] = r.H;
        return d;
      },
      py::arg("spec"), py::arg("state"), py::arg("t_end"), py::arg("dt"), py::arg("seed"), py::arg("sample_every") = 1);

  m.def(
      "find_equilibria",
      [](const ChainSpec& spec, std::uint64_t seed) {
        EquilibriumConfig ec;
        ec.seed = seed;
        const EquilibriumResult r = find_equilibria(spec, ec);
        return py::make_tuple(r.roots, py::make_tuple(-r.box.b, r.box.a));
      },
      py::arg("spec"), py::arg("seed") = 3, "returns (roots, (lower, upper) box bounds)");
  m.def(
      "order_of_energy",
      [](const ChainSpec& spec, const State& s, int kmax) {
        const OrderResult r = order_of(spec, s, Observable::energy(), kmax);
        return r.resolved ? py::object(py::int_(r.order)) : py::object(py::none());
      },
      py::arg("spec"), py::arg("state"), py::arg("kmax"), "smallest k with L^k H != 0, None when unresolved");
}
