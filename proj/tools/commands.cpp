#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "config.hpp"
#include "lyapchain/csv.hpp"
#include "lyapchain/detail/random.hpp"
#include "lyapchain/errors.hpp"
#include "lyapchain/lyapunov_rotor.hpp"
#include "lyapchain/matrosov.hpp"
#include "lyapchain/oscillator_analysis.hpp"
#include "lyapchain/sampling.hpp"
#include "lyapchain/sim.hpp"
#include "lyapchain/stats.hpp"

namespace lyapchain::cli {

namespace {

namespace fs = std::filesystem;

struct Context {
  std::string command;
  ExperimentConfig cfg;
  Block top;
  fs::path out;
  Provenance prov;

  const ChainSpec& chain() {
    top.sub("chain");  // parsed up front; mark it used
    if (!cfg.chain) top.fail("chain", "this command needs a chain block");
    return *cfg.chain;
  }
  std::uint64_t seed(std::uint64_t salt) const { return stream_seed(cfg.seed, salt, 7); }
  fs::path base_dir() const { return cfg.path.parent_path(); }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    return f;
  }
};

struct Outcome {
  int code = kComplete;
  std::string summary;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string pass_word(bool ok) { return ok ? "PASS" : "FAIL"; }

LyapCoeffs coeffs_from(Context& c, int n) {
  LyapCoeffs k = parse_coeffs(c.top.sub("coeffs"), c.base_dir());
  if (k.n != n) c.top.fail("coeffs", "coefficients are for N=" + std::to_string(k.n) + ", the chain has N=" + std::to_string(n));
  return k;
}

void write_coeffs(const fs::path& p, const LyapCoeffs& c) {
  std::ofstream f(p, std::ios::binary);
  f << "coeffs:\n  a: [";
  for (std::size_t i = 0; i < c.a.size(); ++i) f << (i ? ", " : "") << format_double(c.a[i]);
  f << "]\n  C1: " << format_double(c.C1) << "\n  h0: " << format_double(c.h0) << "\n";
}

Outcome cmd_validate(Context& c) {
  const ChainSpec& spec = c.chain();
  std::ostringstream s;
  Outcome o;
  std::ofstream f = c.open("validate.csv");
  if (spec.kind == ChainKind::Rotator) {
    CsvWriter csv(f, {"bond", "pass", "min_nondegeneracy", "argmin_nondegeneracy", "min_value", "shift"}, &c.prov);
    bool all = true;
    for (int j = 0; j < spec.n - 1; ++j) {
      // the report is taken against the unshifted potential, so a normalised chain still shows the shift
      ValidationReport r = validate_rotor_potential(spec.interaction[j]);
      csv << j + 1 << r.pass << r.min_nondegeneracy << r.argmin_nondegeneracy << r.min_value << r.shift;
      csv.end_row();
      all = all && r.pass;
      s << "V_" << j + 1 << ": " << pass_word(r.pass) << "  min (V')^2+(V'')^2 = " << format_double(r.min_nondegeneracy)
        << " at x = " << format_double(r.argmin_nondegeneracy) << ", min V = " << format_double(r.min_value)
        << ", shift " << format_double(r.shift);
      if (!r.pass) s << "  (" << r.message << ")";
      s << "\n";
    }
    o.code = all ? kComplete : kFailed;
  } else {
    const OscillatorValidationReport r = validate_oscillator_potentials(spec);
    CsvWriter csv(f, {"class", "pass", "threshold", "R"}, &c.prov);
    csv << to_string(r.cls) << r.pass << r.threshold << r.R;
    csv.end_row();
    s << "oscillator potentials: " << pass_word(r.pass) << ", class " << to_string(r.cls) << ", order bound r = "
      << r.threshold << ", convex for |x| >= " << format_double(r.R);
    if (!r.message.empty()) s << "  (" << r.message << ")";
    s << "\n";
    o.code = r.pass ? kComplete : kFailed;
  }
  o.summary = s.str();
  return o;
}

Outcome cmd_simulate(Context& c) {
  const ChainSpec& spec = c.chain();
  const State s0 = parse_state(c.top.sub("state"), spec, c.seed(1));
  Block b = c.top.sub("simulate");
  const double t_end = b.require<double>("t_end");
  IntegrateOptions opt;
  opt.rtol = b.get<double>("rtol", opt.rtol);
  opt.atol = b.get<double>("atol", opt.atol);
  opt.samples = b.get<int>("samples", opt.samples);
  opt.max_steps = b.get<long>("max_steps", 0);
  opt.keep_states = false;
  if (c.top.has("coeffs")) opt.coeffs = coeffs_from(c, spec.n);
  b.finish();
  if (c.cfg.wall_clock_minutes > 0) opt.wall_clock_seconds = 60 * c.cfg.wall_clock_minutes;

  Outcome o;
  std::ostringstream s;
  try {
    const TrajectoryRecord r = integrate(spec, s0, t_end, opt);
    std::ofstream f = c.open("trajectory.csv");
    write_trajectory_csv(f, r, &c.prov);
    s << r.meta << ", " << r.steps << " steps to t = " << format_double(r.t_reached) << (r.capped ? " (capped)" : "")
      << "\nH: " << format_double(r.H.front()) << " -> " << format_double(r.H.back())
      << "\nledger error " << format_double(r.ledger_error()) << ", largest energy increase "
      << format_double(r.max_energy_increase()) << "\n";
  } catch (const StepUnderflow& e) {
    s << "StepUnderflow at t = " << format_double(e.t) << ": " << e.what() << "\n";
    o.code = kFailed;
  }
  o.summary = s.str();
  return o;
}

Outcome cmd_simulate_sde(Context& c) {
  const ChainSpec& spec = c.chain();
  const State s0 = parse_state(c.top.sub("state"), spec, c.seed(1));
  Block b = c.top.sub("simulate_sde");
  const double t_end = b.require<double>("t_end");
  const double dt = b.require<double>("dt");
  const int ensemble = b.get<int>("ensemble", 1);
  SdeOptions opt;
  opt.sample_every = b.get<int>("sample_every", 100);
  if (c.top.has("coeffs")) opt.coeffs = coeffs_from(c, spec.n);
  b.finish();
  if (ensemble < 1) b.fail("ensemble", "must be at least 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < ensemble; ++i) seeds.push_back(stream_seed(c.seed(2), i));
  const auto runs = integrate_sde_ensemble(spec, s0, t_end, dt, seeds, opt, c.cfg.threads);

  std::ofstream f = c.open("sde.csv");
  CsvWriter csv(f, {"trajectory", "seed", "t", "H", "W", "ledger"}, &c.prov);
  std::vector<double> hend;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const TrajectoryRecord& r = runs[i];
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      csv << static_cast<int>(i) << static_cast<unsigned long long>(r.seed) << r.times[k] << r.H[k];
      if (r.W.empty())
        csv << "";
      else
        csv << r.W[k];
      csv << r.dissipated[k];
      csv.end_row();
    }
    hend.push_back(r.H.back());
  }
  std::ostringstream s;
  s << runs.size() << " Euler-Maruyama trajectories, dt = " << format_double(dt) << ", t = " << format_double(t_end)
    << "\nfinal H: mean " << format_double(mean(hend));
  if (hend.size() > 1) s << " +- " << format_double(standard_error(hend));
  s << "\n";
  return {kComplete, s.str()};
}

Outcome cmd_calibrate(Context& c) {
  const ChainSpec& spec = c.chain();
  Block b = c.top.sub("calibration");
  CalibConfig k;
  k.seed = b.get<double>("a_seed", k.seed);
  k.kappa = b.get<double>("kappa", k.kappa);
  k.h_lo = b.get<double>("h_lo", k.h_lo);
  k.h_hi = b.get<double>("h_hi", k.h_hi);
  k.samples = b.get<int>("samples", k.samples);
  k.growth = b.get<double>("growth", k.growth);
  k.max_rounds = b.get<int>("max_rounds", k.max_rounds);
  k.bins_per_decade = b.get<int>("bins_per_decade", k.bins_per_decade);
  k.confidence = b.get<double>("confidence", k.confidence);
  k.refine_top = b.get<int>("refine_top", k.refine_top);
  k.refine_steps = b.get<int>("refine_steps", k.refine_steps);
  k.margin = b.get<double>("margin", k.margin);
  if (auto m = b.maybe<std::string>("measure")) {
    try {
      k.measure = sampling_measure_from_string(*m);
    } catch (const std::invalid_argument& e) {
      b.fail("measure", e.what());
    }
  }
  k.initial = b.get<std::vector<double>>("initial", {});
  if (!k.initial.empty() && static_cast<int>(k.initial.size()) != 2 * spec.n - 1)
    b.fail("initial", "need 2N-1 coefficients");
  b.finish();
  if (spec.kind != ChainKind::Rotator) c.top.fail("chain", "calibration needs a rotator chain");
  k.rng_seed = c.seed(3);
  k.threads = c.cfg.threads;

  const CalibrationResult r = calibrate(spec, k);
  std::ofstream f = c.open("calibration.csv");
  write_calibration_csv(f, r.report, &c.prov);
  std::string s = summary(r.report);
  if (r.report.pass) {
    write_coeffs(c.out / "coeffs.yaml", r.coeffs);
    s += "coefficients written to coeffs.yaml\n";
  } else {
    s = "CalibrationFailed: " + s;
  }
  return {r.report.pass ? kComplete : kFailed, s};
}

Outcome cmd_verify(Context& c) {
  const ChainSpec& spec = c.chain();
  const LyapCoeffs k = coeffs_from(c, spec.n);
  Block b = c.top.sub("verify");
  VerifyConfig v;
  v.samples = b.get<int>("samples", v.samples);
  v.h_lo = b.get<double>("h_lo", v.h_lo);
  v.h_hi = b.get<double>("h_hi", v.h_hi);
  v.bins_per_decade = b.get<int>("bins_per_decade", v.bins_per_decade);
  v.confidence = b.get<double>("confidence", v.confidence);
  if (auto m = b.maybe<std::string>("measure")) {
    try {
      v.measure = sampling_measure_from_string(*m);
    } catch (const std::invalid_argument& e) {
      b.fail("measure", e.what());
    }
  }
  b.finish();
  v.rng_seed = c.seed(4);
  v.threads = c.cfg.threads;
  const VerificationReport r = verify_theorem(spec, k, v);
  std::ofstream f = c.open("verification.csv");
  write_verification_csv(f, r, &c.prov);
  return {r.pass ? kComplete : kFailed, summary(r)};
}

MatrosovConfig matrosov_config(Context& c) {
  Block b = c.top.sub("matrosov");
  MatrosovConfig m;
  m.r = b.get<int>("r", m.r);
  m.Q = b.get<double>("Q", m.Q);
  m.eps = b.get<double>("eps", m.eps);
  m.w_max = b.get<double>("w_max", m.w_max);
  m.levels_per_decade = b.get<int>("levels_per_decade", m.levels_per_decade);
  m.samples_per_level = b.get<int>("samples_per_level", m.samples_per_level);
  m.phi_safety = b.get<double>("phi_safety", m.phi_safety);
  m.Phi_safety = b.get<double>("Phi_safety", m.Phi_safety);
  m.derivative_inflation = b.get<double>("derivative_inflation", m.derivative_inflation);
  m.degenerate_tol = b.get<double>("degenerate_tol", m.degenerate_tol);
  b.finish();
  m.seed = c.seed(5);
  m.threads = c.cfg.threads;
  return m;
}

Outcome cmd_matrosov_build(Context& c) {
  const ChainSpec& spec = c.chain();
  const MatrosovConfig m = matrosov_config(c);
  std::ostringstream s;
  try {
    const MatrosovData d = build_matrosov(spec, m);
    const std::string problem = check_tables(d);
    save_matrosov(d, c.out / "matrosov");
    s << "r = " << d.r << ", " << d.w.size() << " levels on (" << format_double(d.w.front()) << ", "
      << format_double(d.w.back()) << "]";
    if (!d.note.empty()) s << "  (" << d.note << ")";
    s << "\ntables: " << (problem.empty() ? "all invariants hold" : problem) << "\nwritten to matrosov/\n";
    return {problem.empty() ? kComplete : kFailed, s.str()};
  } catch (const EnvelopeDegenerate& e) {
    s << "EnvelopeDegenerate at W = " << format_double(e.level) << ": " << e.what() << "\n";
    return {kFailed, s.str()};
  }
}

Outcome cmd_matrosov_certify(Context& c) {
  const ChainSpec& spec = c.chain();
  Block b = c.top.sub("certify");
  CertConfig k;
  k.samples = b.get<int>("samples", k.samples);
  const std::optional<std::string> tables = b.maybe<std::string>("tables");
  const double corrupt = b.get<double>("corrupt_phi", 1.0);
  b.finish();
  k.seed = c.seed(6);
  k.threads = c.cfg.threads;

  std::ostringstream s;
  MatrosovData d;
  if (tables) {
    d = load_matrosov(c.base_dir() / *tables);
    c.top.sub("matrosov");
  } else {
    try {
      d = build_matrosov(spec, matrosov_config(c));
    } catch (const EnvelopeDegenerate& e) {
      s << "EnvelopeDegenerate at W = " << format_double(e.level) << ": " << e.what() << "\n";
      return {kFailed, s.str()};
    }
  }
  if (corrupt != 1.0) {
    for (double& x : d.phi) x *= corrupt;
    s << "negative control: phi scaled by " << format_double(corrupt) << "\n";
  }
  const CertReport r = certify_strictness(spec, d, k);
  std::ofstream f = c.open("certify.csv");
  CsvWriter csv(f, {"state_hash", "W", "lie_Wsharp", "margin", "checked"}, &c.prov);
  for (const CertSample& row : r.rows) {
    csv << state_hash(row.s) << row.w << row.lie << row.margin << (row.w > d.Q + d.eps);
    csv.end_row();
  }
  s << pass_word(r.pass) << ": " << r.checked << " states checked, " << r.excluded_band << " in the cutoff band, "
    << r.failures << " with L W# + phi(W)/4 > 0\nmax margin " << format_double(r.max_margin)
    << ", min W# - (W - Q - eps) = " << format_double(r.min_proper_gap) << "\n";
  return {r.pass ? kComplete : kFailed, s.str()};
}

Outcome cmd_equilibria(Context& c) {
  const ChainSpec& spec = c.chain();
  Block b = c.top.sub("equilibria");
  EquilibriumConfig k;
  k.starts_per_particle = b.get<int>("starts_per_particle", k.starts_per_particle);
  k.dedupe = b.get<double>("dedupe", k.dedupe);
  k.residual_tol = b.get<double>("residual_tol", k.residual_tol);
  k.max_iterations = b.get<int>("max_iterations", k.max_iterations);
  b.finish();
  if (spec.kind != ChainKind::Oscillator) c.top.fail("chain", "equilibria needs an oscillator chain");
  k.seed = c.seed(7);
  k.threads = c.cfg.threads;
  const OscillatorValidationReport v = validate_oscillator_potentials(spec, k.validation);
  if (!v.pass) return {kFailed, "potentials fail validation: " + v.message + "\n"};
  const EquilibriumResult r = find_equilibria(spec, k);
  std::ofstream f = c.open("equilibria.csv");
  std::vector<std::string> header{"root"};
  for (int j = 1; j <= spec.n; ++j) header.push_back("q" + std::to_string(j));
  header.push_back("residual");
  header.push_back("in_box");
  CsvWriter csv(f, header, &c.prov);
  for (std::size_t i = 0; i < r.roots.size(); ++i) {
    const auto& q = r.roots[i];
    const auto res = equilibrium_residual(spec, q);
    double rn = 0.0;
    bool in = true;
    for (int j = 0; j < spec.n; ++j) {
      rn = std::max(rn, std::abs(res[j]));
      in = in && q[j] > -r.box.b && q[j] < r.box.a;
    }
    csv << static_cast<int>(i);
    for (double x : q) csv << x;
    csv << rn << in;
    csv.end_row();
  }
  std::ostringstream s;
  const bool ok = r.found && r.outside_box == 0;
  s << pass_word(ok) << ": " << r.roots.size() << " equilibria from " << r.starts << " starts (" << r.converged
    << " converged), box [-" << format_double(r.box.b) << ", " << format_double(r.box.a) << "]^" << spec.n
    << ", " << r.outside_box << " outside\n";
  if (!r.found) s << "NoConvergence: " << r.message << "\n";
  return {ok ? kComplete : kFailed, s.str()};
}

Outcome cmd_order_stats(Context& c) {
  const ChainSpec& spec = c.chain();
  Block b = c.top.sub("order_stats");
  OrderConfig k;
  k.samples = b.get<int>("samples", k.samples);
  k.kmax = b.get<int>("kmax", k.kmax);
  k.momentum_scale = b.get<double>("momentum_scale", k.momentum_scale);
  k.box_margin = b.get<double>("box_margin", k.box_margin);
  b.finish();
  if (spec.kind != ChainKind::Oscillator) c.top.fail("chain", "order-stats needs an oscillator chain");
  k.seed = c.seed(8);
  k.threads = c.cfg.threads;
  k.throw_on_violation = false;
  const OrderReport r = order_statistics(spec, k);
  std::ofstream f = c.open("order_stats.csv");
  write_order_csv(f, r, &c.prov);
  std::ostringstream s;
  const bool ok = r.violations == 0;
  s << (ok ? "PASS" : "ThresholdViolation") << ": " << r.rows.size() << " states, order bound r = " << r.threshold
    << ", max finite order " << r.max_finite_order << ", max outside K " << r.max_order_outside_K << ", "
    << r.unresolved << " unresolved (" << r.unresolved_outside_K << " outside K), " << r.violations
    << " violations\n";
  return {ok ? kComplete : kFailed, s.str()};
}

Outcome cmd_decay_scan(Context& c) {
  const ChainSpec& spec = c.chain();
  Block b = c.top.sub("decay_scan");
  DecayProtocol p;
  p.H0 = b.get<std::vector<double>>("H0", p.H0);
  if (auto fams = b.maybe<std::vector<std::string>>("families")) {
    p.families.clear();
    for (const auto& name : *fams) {
      try {
        p.families.push_back(decay_family_from_string(name));
      } catch (const std::invalid_argument& e) {
        b.fail("families", e.what());
      }
    }
  }
  p.ensemble = b.get<int>("ensemble", p.ensemble);
  p.eps = b.get<double>("eps", p.eps);
  p.rtol = b.get<double>("rtol", p.rtol);
  p.atol = b.get<double>("atol", p.atol);
  p.samples = b.get<int>("samples", p.samples);
  p.max_steps = b.get<long>("max_steps", p.max_steps);
  p.confidence = b.get<double>("confidence", p.confidence);
  b.finish();
  if (spec.kind != ChainKind::Rotator) c.top.fail("chain", "decay-scan needs a rotator chain");
  if (c.top.has("coeffs")) p.coeffs = coeffs_from(c, spec.n);
  p.wall_clock_minutes = c.cfg.wall_clock_minutes;
  p.seed = c.seed(9);
  p.threads = c.cfg.threads;

  DecayReport r;
  try {
    r = decay_scan(spec, p);
  } catch (const std::invalid_argument& e) {
    c.top.fail("decay_scan", e.what());
  }
  {
    std::ofstream f = c.open("decay.csv");
    write_decay_csv(f, r, &c.prov);
  }
  {
    std::ofstream f = c.open("decay_fit.csv");
    write_decay_fit_csv(f, r, &c.prov);
  }
  std::ostringstream s;
  bool failed = false;
  for (const DecayRow& row : r.rows) {
    s << to_string(row.family) << " H0 = " << format_double(row.H0) << ": ";
    if (row.window_empty) {
      s << "WindowEmpty (" << format_double(row.window_lo) << " > " << format_double(row.window_hi) << ")\n";
      continue;
    }
    s << "window [" << format_double(row.window_lo) << ", " << format_double(row.window_hi) << "], ran to t = "
      << format_double(row.t_end) << (row.capped ? (row.capped_by_clock ? " (wall clock cap)" : " (step cap)") : "")
      << ", rho = " << format_double(row.rho) << ", rho H0^(2N-3) >= " << format_double(row.C_rho) << "\n";
  }
  for (const DecayFamilyFit& fit : r.fits) {
    if (fit.fit.n < 2) {
      s << to_string(fit.family) << ": " << fit.fit.n << " measured rows, no fit\n";
      continue;
    }
    s << to_string(fit.family) << ": slope " << format_double(fit.fit.slope) << " (predicted "
      << format_double(fit.predicted) << "), C = " << format_double(fit.C_fit) << ", bound "
      << (fit.bound_ok ? "holds" : "not established") << "\n";
    // only a measured violation is a failure; empty or unreached windows are reported as such
    if (!(fit.C_fit > 0)) failed = true;
  }
  return {failed ? kFailed : kComplete, s.str()};
}

Outcome cmd_generator_check(Context& c) {
  const ChainSpec& spec = c.chain();
  const State s0 = parse_state(c.top.sub("state"), spec, c.seed(1));
  Block b = c.top.sub("generator_check");
  GeneratorConfig k;
  k.dts = b.get<std::vector<double>>("dts", k.dts);
  k.ensemble = b.get<int>("ensemble", k.ensemble);
  const std::vector<std::string> names = b.get<std::vector<std::string>>("targets", {"p1_squared", "H"});
  // the decomposition usually wants its own state (high energy, p1 = 0)
  std::optional<State> gen_w;
  if (b.has("gen_w")) gen_w = parse_state(b.sub("gen_w"), spec, c.seed(11));
  b.finish();
  if (k.ensemble < 1000) b.fail("ensemble", "the generator check needs at least 1000 pairs");
  k.seed = c.seed(10);
  k.threads = c.cfg.threads;
  std::optional<LyapCoeffs> coeffs;
  const auto need_coeffs = [&] {
    if (!coeffs) coeffs = coeffs_from(c, spec.n);
    return *coeffs;
  };
  std::vector<GenReport> reps;
  for (const std::string& name : names) {
    GeneratorTarget t;
    if (name == "p1_squared")
      t = GeneratorTarget::p1_squared();
    else if (name == "H")
      t = GeneratorTarget::energy(spec);
    else if (name == "W")
      t = GeneratorTarget::lyapunov(spec, need_coeffs());
    else
      b.fail("targets", "unknown target '" + name + "' (p1_squared, H, W)");
    reps.push_back(generator_check(spec, t, s0, k));
  }
  std::ofstream f = c.open("generator.csv");
  write_generator_csv(f, reps, &c.prov);
  std::ostringstream s;
  bool ok = true;
  for (const GenReport& r : reps) {
    const GeneratorRow& fin = r.rows.back();
    s << r.target << ": analytic " << format_double(r.analytic) << " (L_F " << format_double(r.lie) << " + diffusion "
      << format_double(r.diffusion) << "), estimate " << format_double(fin.estimate) << " +- "
      << format_double(fin.se) << " at dt = " << format_double(fin.dt) << ", bias R^2 "
      << format_double(r.bias_fit.r2) << (r.within_3se ? "" : "  [outside 3 SE]") << "\n";
    ok = ok && r.within_3se;
  }
  if (gen_w) {
    const GenWDecomposition d = gen_w_decomposition(spec, need_coeffs(), *gen_w);
    std::ofstream g = c.open("gen_w.csv");
    CsvWriter csv(g, {"H", "lie_W", "diffusion", "total", "bound", "asymptotic"}, &c.prov);
    csv << d.H << d.lie_W << d.diffusion << d.total << d.bound << d.asymptotic;
    csv.end_row();
    s << "L^T1 W = " << format_double(d.lie_W) << " + " << format_double(d.diffusion) << " = "
      << format_double(d.total) << (d.total > 0 ? " > 0: W is not a Lyapunov function for this generator" : "")
      << "\n";
  }
  return {ok ? kComplete : kFailed, s.str()};
}

using Handler = std::function<Outcome(Context&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"validate", cmd_validate},
      {"simulate", cmd_simulate},
      {"simulate-sde", cmd_simulate_sde},
      {"calibrate", cmd_calibrate},
      {"verify-lyapunov", cmd_verify},
      {"matrosov-build", cmd_matrosov_build},
      {"matrosov-certify", cmd_matrosov_certify},
      {"equilibria", cmd_equilibria},
      {"order-stats", cmd_order_stats},
      {"decay-scan", cmd_decay_scan},
      {"generator-check", cmd_generator_check},
  };
  return h;
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"validate",        "simulate",       "simulate-sde", "calibrate",
                                              "verify-lyapunov", "matrosov-build", "matrosov-certify",
                                              "equilibria",      "order-stats",    "decay-scan",   "generator-check"};
  return names;
}

int run(const std::string& command, const fs::path& config_path, const Overrides& ov, std::ostream& log) {
  const auto it = handlers().find(command);
  if (it == handlers().end()) {
    log << "error: unknown command '" << command << "'\n";
    return kUsage;
  }
  try {
    Context c;
    c.command = command;
    c.cfg = load_config(config_path);
    if (ov.seed) c.cfg.seed = *ov.seed;
    if (ov.threads) c.cfg.threads = *ov.threads;
    if (ov.wall_clock_minutes) c.cfg.wall_clock_minutes = *ov.wall_clock_minutes;
    c.top = Block(c.cfg.root, "");
    // these were read by parse_config
    for (const char* k : {"description", "seed", "threads", "output", "wall_clock_minutes"}) c.top.raw(k);
    if (ov.out)
      c.out = *ov.out;
    else if (const char* env = std::getenv("LYAPCHAIN_OUT"); env && *env)
      c.out = env;
    else
      c.out = c.cfg.output.is_absolute() ? c.cfg.output : c.cfg.path.parent_path() / c.cfg.output;
    fs::create_directories(c.out);
    c.prov.command = command;
    c.prov.config_hash = c.cfg.hash;
    c.prov.seed = c.cfg.seed;
    if (ov.timestamp) c.prov.timestamp = utc_now();

    const Outcome o = it->second(c);
    std::ofstream sum(c.out / "summary.txt", std::ios::binary);
    sum << command << " (config " << c.cfg.hash << ", seed " << c.cfg.seed << ")\n" << o.summary;
    log << o.summary;
    return o.code;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ReportFailure& e) {
    log << "FAIL: " << e.what() << "\n";
    return kFailed;
  } catch (const StepUnderflow& e) {
    log << "FAIL: StepUnderflow: " << e.what() << "\n";
    return kFailed;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace lyapchain::cli
