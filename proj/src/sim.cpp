#include "lyapchain/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>

#include "lyapchain/detail/parallel.hpp"
#include "lyapchain/detail/random.hpp"
#include "lyapchain/errors.hpp"
#include "lyapchain/sampling.hpp"

namespace lyapchain {

namespace {

namespace odeint = boost::numeric::odeint;
using Vec = std::vector<double>;
using Clock = std::chrono::steady_clock;

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

// x = (p_1..p_N, q_1..q_N, D) with D' = sum_damped p_j^2
struct FlowSystem {
  const ChainSpec* spec;
  int n;
  mutable Vec f;

  void operator()(const Vec& x, Vec& dx, double) const {
    forces(*spec, std::span<const double>(x.data(), n), std::span<const double>(x.data() + n, n), f);
    double d = 0.0;
    for (int j = 0; j < n; ++j) {
      dx[j] = f[j];
      dx[n + j] = x[j];
      if (spec->damping[j]) d += x[j] * x[j];
    }
    dx[2 * n] = d;
  }
};

void record(const ChainSpec& spec, const std::optional<LyapCoeffs>& coeffs, bool keep, TrajectoryRecord& rec, double t,
            const State& raw, double dissipated) {
  const State s = canonical(spec, raw);
  const double h = energy(spec, s);
  if (!std::isfinite(h)) throw std::overflow_error("energy left the float range");
  rec.times.push_back(t);
  rec.H.push_back(h);
  if (coeffs) rec.W.push_back(eval_W(spec, *coeffs, s));
  rec.dissipated.push_back(dissipated);
  if (keep) rec.states.push_back(s);
}

State unpack(const Vec& x, int n) {
  return State{Vec(x.begin(), x.begin() + n), Vec(x.begin() + n, x.begin() + 2 * n)};
}

bool noisy(const ChainSpec& spec, int j) { return spec.damping[j] && spec.temperatures[j] > 0.0; }

}  // namespace

double TrajectoryRecord::ledger_error() const {
  if (H.empty()) return 0.0;
  const double scale = std::max(1.0, std::abs(H[0]));
  double e = 0.0;
  for (std::size_t k = 0; k < H.size(); ++k) e = std::max(e, std::abs(H[0] - H[k] - dissipated[k]) / scale);
  return e;
}

double TrajectoryRecord::max_energy_increase() const {
  if (H.empty()) return 0.0;
  const double scale = std::max(1.0, std::abs(H[0]));
  double e = 0.0;
  for (std::size_t k = 1; k < H.size(); ++k) e = std::max(e, (H[k] - H[k - 1]) / scale);
  return e;
}

TrajectoryRecord integrate(const ChainSpec& spec, const State& s0, double t_end, const IntegrateOptions& opt) {
  spec.check();
  check_state(spec, s0);
  if (!(opt.rtol > 0) || !(opt.atol > 0)) throw std::invalid_argument("integrator tolerances must be positive");
  if (!(t_end > 0)) throw std::invalid_argument("t_end must be positive");
  const int n = spec.n;

  std::vector<double> ts = opt.sample_times;
  if (ts.empty()) {
    const int m = std::max(opt.samples, 1);
    for (int k = 0; k <= m; ++k) ts.push_back(t_end * k / m);
  }
  if (!std::is_sorted(ts.begin(), ts.end()) || ts.front() < 0 || ts.back() > t_end)
    throw std::invalid_argument("sample times must be ascending within [0, t_end]");

  TrajectoryRecord rec;
  {
    std::ostringstream meta;
    meta << "dopri5 rtol=" << format_double(opt.rtol) << " atol=" << format_double(opt.atol);
    rec.meta = meta.str();
  }
  Vec x(2 * n + 1, 0.0);
  for (int j = 0; j < n; ++j) {
    x[j] = s0.p[j];
    x[n + j] = s0.q[j];
  }
  FlowSystem sys{&spec, n, Vec(n)};
  auto stepper = odeint::make_dense_output(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<Vec>());
  stepper.initialize(x, 0.0, std::min(1e-3, t_end / 100));

  std::size_t k = 0;
  while (k < ts.size() && ts[k] <= 0.0) record(spec, opt.coeffs, opt.keep_states, rec, ts[k++], s0, 0.0);

  const auto start = Clock::now();
  const bool rotor = spec.kind == ChainKind::Rotator;
  Vec xs(2 * n + 1);
  double t = 0.0;
  while (k < ts.size()) {
    try {
      t = stepper.do_step(sys).second;
    } catch (const odeint::step_adjustment_error&) {
      throw StepUnderflow("step size adjustment failed", stepper.current_time());
    }
    ++rec.steps;
    while (k < ts.size() && ts[k] <= t) {
      stepper.calc_state(ts[k], xs);
      record(spec, opt.coeffs, opt.keep_states, rec, ts[k], unpack(xs, n), xs[2 * n]);
      ++k;
    }
    if (k >= ts.size()) break;
    if (stepper.current_time_step() < 1e-14 * t_end)
      throw StepUnderflow("step collapsed below 1e-14 t_end", stepper.current_time());
    bool stop = opt.max_steps > 0 && rec.steps >= opt.max_steps;
    if (!stop && opt.wall_clock_seconds > 0 && rec.steps % 4096 == 0 &&
        std::chrono::duration<double>(Clock::now() - start).count() > opt.wall_clock_seconds) {
      stop = true;
      rec.capped_by_clock = true;
    }
    if (stop) {
      rec.capped = true;
      const Vec& cur = stepper.current_state();
      record(spec, opt.coeffs, opt.keep_states, rec, t, unpack(cur, n), cur[2 * n]);
      break;
    }
    if (rotor) {
      const Vec& cur = stepper.current_state();
      bool far = false;
      for (int j = 0; j < n; ++j) far = far || std::abs(cur[n + j]) > opt.reduce_above;
      if (far) {
        // potentials are 2pi periodic in every bond, so folding each angle leaves the flow unchanged
        Vec y = cur;
        for (int j = 0; j < n; ++j) y[n + j] -= two_pi * std::floor(y[n + j] / two_pi);
        stepper.initialize(y, t, stepper.current_time_step());
      }
    }
  }
  rec.t_reached = rec.capped ? t : ts.back();
  return rec;
}

void euler_maruyama_step(const ChainSpec& spec, State& s, double dt, const std::vector<double>& noise) {
  const int n = spec.n;
  double f[64];
  std::vector<double> big;
  double* out = f;
  if (n > 64) {
    big.resize(n);
    out = big.data();
  }
  forces(spec, s.p, s.q, std::span<double>(out, n));
  for (int j = 0; j < n; ++j) {
    const double p = s.p[j];
    s.p[j] = p + dt * out[j];
    if (noisy(spec, j)) s.p[j] += std::sqrt(2.0 * spec.temperatures[j] * dt) * noise[j];
    s.q[j] += dt * p;
  }
}

TrajectoryRecord integrate_sde(const ChainSpec& spec, const State& s0, double t_end, double dt, std::uint64_t seed,
                               const SdeOptions& opt) {
  spec.check();
  check_state(spec, s0);
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  if (!(t_end > 0)) throw std::invalid_argument("t_end must be positive");
  const int n = spec.n;
  const long steps = std::max(1L, std::lround(t_end / dt));
  const int every = std::max(opt.sample_every, 1);

  TrajectoryRecord rec;
  rec.seed = seed;
  {
    std::ostringstream meta;
    meta << "euler-maruyama dt=" << format_double(dt) << " seed=" << seed;
    rec.meta = meta.str();
  }
  SplitMix64 rng(seed);
  State s = s0;
  std::vector<double> noise(n, 0.0);
  double d = 0.0;
  record(spec, opt.coeffs, opt.keep_states, rec, 0.0, s, 0.0);
  for (long k = 1; k <= steps; ++k) {
    for (int j = 0; j < n; ++j) noise[j] = noisy(spec, j) ? standard_normal(rng) : 0.0;
    for (int j = 0; j < n; ++j)
      if (spec.damping[j]) d += dt * s.p[j] * s.p[j];
    euler_maruyama_step(spec, s, dt, noise);
    if (spec.kind == ChainKind::Rotator)
      for (double& q : s.q)
        if (std::abs(q) > 64.0) q -= two_pi * std::floor(q / two_pi);
    if (k % every == 0 || k == steps) record(spec, opt.coeffs, opt.keep_states, rec, k * dt, s, d);
  }
  rec.steps = steps;
  rec.t_reached = steps * dt;
  return rec;
}

std::vector<TrajectoryRecord> integrate_sde_ensemble(const ChainSpec& spec, const State& s0, double t_end, double dt,
                                                     const std::vector<std::uint64_t>& seeds, const SdeOptions& opt,
                                                     int threads) {
  std::vector<TrajectoryRecord> out(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) { out[i] = integrate_sde(spec, s0, t_end, dt, seeds[i], opt); });
  return out;
}

GeneratorTarget GeneratorTarget::p1_squared() {
  return {"p1^2", [](const State& s) { return s.p[0] * s.p[0]; }, Observable::momentum_squared(0)};
}

GeneratorTarget GeneratorTarget::energy(const ChainSpec& spec) {
  return {"H", [spec](const State& s) { return lyapchain::energy(spec, s); }, Observable::energy()};
}

GeneratorTarget GeneratorTarget::lyapunov(const ChainSpec& spec, const LyapCoeffs& c) {
  return {"W", [spec, c](const State& s) { return eval_W(spec, c, s); }, w_observable(c)};
}

double second_p_derivative(const ChainSpec& spec, const Observable& f, const State& s, int j) {
  std::vector<Jet> p, q;
  for (int i = 0; i < spec.n; ++i) {
    p.push_back(i == j ? Jet::variable(s.p[i], 2) : Jet::constant(s.p[i], 2));
    q.push_back(Jet::constant(s.q[i], 2));
  }
  return f.eval(StateJet::from_coordinates(spec, std::move(p), std::move(q))).derivative(2);
}

namespace {

double diffusion_term(const ChainSpec& spec, const Observable& f, const State& s) {
  double d = 0.0;
  for (int j = 0; j < spec.n; ++j)
    if (noisy(spec, j)) d += spec.temperatures[j] * second_p_derivative(spec, f, s, j);
  return d;
}

double lie_of(const ChainSpec& spec, const GeneratorTarget& f, const State& s) {
  // H decays exactly by the dissipation; the generic jet would only add rounding
  if (f.name == "H") return dissipation(spec, s);
  return lie_derivatives(spec, s, f.observable, 1).values[1];
}

}  // namespace

double generator_analytic(const ChainSpec& spec, const GeneratorTarget& f, const State& s) {
  return lie_of(spec, f, s) + diffusion_term(spec, f.observable, s);
}

GenReport generator_check(const ChainSpec& spec, const GeneratorTarget& f, const State& s,
                          const GeneratorConfig& cfg) {
  spec.check();
  check_state(spec, s);
  if (cfg.dts.empty()) throw std::invalid_argument("generator check needs at least one dt");
  if (cfg.ensemble < 2) throw std::invalid_argument("generator check needs an ensemble of at least 2");
  GenReport rep;
  rep.target = f.name;
  rep.lie = lie_of(spec, f, s);
  rep.diffusion = diffusion_term(spec, f.observable, s);
  rep.analytic = rep.lie + rep.diffusion;
  rep.d2f_dp1 = second_p_derivative(spec, f.observable, s, 0);

  const int n = spec.n;
  const std::size_t m = cfg.ensemble, nd = cfg.dts.size();
  std::vector<std::vector<double>> g(nd, std::vector<double>(m));
  const double f0 = f.value(s);
  parallel_for(m, cfg.threads, [&](std::size_t i) {
    SplitMix64 rng = stream(cfg.seed, i, 91);
    std::vector<double> plus(n, 0.0), minus(n, 0.0);
    for (int j = 0; j < n; ++j)
      if (noisy(spec, j)) {
        plus[j] = standard_normal(rng);
        minus[j] = -plus[j];
      }
    for (std::size_t d = 0; d < nd; ++d) {
      const double dt = cfg.dts[d];
      State a = s, b = s;
      euler_maruyama_step(spec, a, dt, plus);
      euler_maruyama_step(spec, b, dt, minus);
      g[d][i] = (0.5 * (f.value(a) + f.value(b)) - f0) / dt;
    }
  });
  std::vector<double> bias;
  for (std::size_t d = 0; d < nd; ++d) {
    GeneratorRow row;
    row.dt = cfg.dts[d];
    row.estimate = mean(g[d]);
    row.se = standard_error(g[d]);
    row.bias = row.estimate - rep.analytic;
    bias.push_back(row.bias);
    rep.rows.push_back(row);
  }
  if (nd >= 2) {
    rep.bias_fit = fit_line(cfg.dts, bias);
    rep.bias_linear = nd >= 3 && rep.bias_fit.r2 >= 0.9;
  }
  const auto finest = std::min_element(rep.rows.begin(), rep.rows.end(),
                                       [](const GeneratorRow& a, const GeneratorRow& b) { return a.dt < b.dt; });
  rep.within_3se = std::abs(finest->bias) <= 3 * finest->se;
  return rep;
}

GenWDecomposition gen_w_decomposition(const ChainSpec& spec, const LyapCoeffs& c, const State& s) {
  GenWDecomposition d;
  const double t1 = spec.damping[0] ? spec.temperatures[0] : 0.0;
  d.H = energy(spec, s);
  d.lie_W = lie_W(spec, c, s);
  d.diffusion = t1 * second_p_derivative(spec, w_observable(c), s, 0);
  d.total = d.lie_W + d.diffusion;
  d.bound = -d.H + c.C1 + d.diffusion;
  d.asymptotic = t1 * c.a[0] * c.gamma0 * std::pow(d.H, c.gamma0 - 1);
  return d;
}

const char* to_string(DecayFamily f) {
  switch (f) {
    case DecayFamily::FastRotator: return "fast_rotator";
    case DecayFamily::SpreadEnergy: return "spread_energy";
  }
  return "?";
}

DecayFamily decay_family_from_string(const std::string& s) {
  if (s == "fast_rotator") return DecayFamily::FastRotator;
  if (s == "spread_energy") return DecayFamily::SpreadEnergy;
  throw std::invalid_argument("unknown decay family '" + s + "'");
}

State decay_initial_state(const ChainSpec& spec, double h0, DecayFamily family, SplitMix64& rng) {
  const int n = spec.n;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    State s{Vec(n, 0.0), Vec(n)};
    for (double& q : s.q) q = two_pi * rng.uniform();
    const double k = h0 - potential_energy(spec, s.q);
    if (k < 0) continue;
    if (family == DecayFamily::FastRotator) {
      s.p[n - 1] = std::sqrt(2 * k);
    } else {
      for (double& p : s.p) p = (rng.uniform() < 0.5 ? -1.0 : 1.0) * std::sqrt(2 * k / n);
    }
    return s;
  }
  throw std::invalid_argument("energy level below the potential");
}

namespace {

struct TrajectoryOutcome {
  double t_reached = 0.0;
  bool capped = false, by_clock = false;
  std::vector<double> rho;  ///< at in-window sample times
  double ledger = 0.0;
  bool w_monotone = true;
  double c_w = std::numeric_limits<double>::infinity();
};

}  // namespace

DecayReport decay_scan(const ChainSpec& spec, const DecayProtocol& pr) {
  spec.check();
  if (spec.kind != ChainKind::Rotator) throw std::invalid_argument("decay scan needs a rotator chain");
  if (pr.H0.empty()) throw std::invalid_argument("decay scan needs H0 values");
  const auto [lo_it, hi_it] = std::minmax_element(pr.H0.begin(), pr.H0.end());
  if (std::log10(*hi_it / *lo_it) < 1.5) throw std::invalid_argument("H0 values must span at least 1.5 decades");
  if (pr.ensemble < 1) throw std::invalid_argument("ensemble must be positive");
  if (!(pr.eps > 0 && pr.eps < 1)) throw std::invalid_argument("eps must lie in (0, 1)");
  if (pr.coeffs && pr.coeffs->n != spec.n) throw std::invalid_argument("coefficients do not match N");

  const auto start = Clock::now();
  const int n = spec.n;
  const double g0 = 2 * n - 1, decay_exp = 2 * n - 3;
  DecayReport rep;

  struct Job {
    std::size_t row;
    int member;
  };
  std::vector<Job> jobs;
  for (std::size_t fi = 0; fi < pr.families.size(); ++fi)
    for (std::size_t hi = 0; hi < pr.H0.size(); ++hi) {
      DecayRow row;
      row.H0 = pr.H0[hi];
      row.family = pr.families[fi];
      row.window_lo = std::pow(row.H0, g0 - 2.5) / pr.eps;
      row.window_hi = pr.eps * std::pow(row.H0, g0 - 1);
      row.window_empty = row.window_lo > row.window_hi;
      if (!row.window_empty)
        for (int i = 0; i < pr.ensemble; ++i) jobs.push_back({rep.rows.size(), i});
      rep.rows.push_back(row);
    }

  const double deadline = pr.wall_clock_minutes * 60.0;
  std::vector<TrajectoryOutcome> out(jobs.size());
  parallel_for(jobs.size(), pr.threads, [&](std::size_t ji) {
    const Job& job = jobs[ji];
    const DecayRow& row = rep.rows[job.row];
    SplitMix64 rng = stream(pr.seed, job.row * 100003 + job.member, 41);
    const State s0 = decay_initial_state(spec, row.H0, row.family, rng);

    IntegrateOptions opt;
    opt.rtol = pr.rtol;
    opt.atol = pr.atol;
    opt.coeffs = pr.coeffs;
    opt.keep_states = false;
    opt.max_steps = pr.max_steps;
    const double used = std::chrono::duration<double>(Clock::now() - start).count();
    opt.wall_clock_seconds = deadline > 0 ? std::max(deadline - used, 1e-3) : 0.0;
    // log-spaced from well before the window to its end
    const int m = std::max(pr.samples, 2);
    const double t0 = std::min(1.0, row.window_lo / 100);
    opt.sample_times.push_back(0.0);
    for (int k = 0; k < m; ++k) opt.sample_times.push_back(t0 * std::pow(row.window_hi / t0, double(k) / (m - 1)));
    opt.sample_times.back() = row.window_hi;
    for (int k = 0; k < m / 2; ++k)  // extra in-window samples
      opt.sample_times.push_back(row.window_lo + (row.window_hi - row.window_lo) * (k + 0.5) / (m / 2));
    std::sort(opt.sample_times.begin(), opt.sample_times.end());

    const TrajectoryRecord tr = integrate(spec, s0, row.window_hi, opt);
    TrajectoryOutcome& o = out[ji];
    o.t_reached = tr.t_reached;
    o.capped = tr.capped;
    o.by_clock = tr.capped_by_clock;
    o.ledger = tr.ledger_error();
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      const double t = tr.times[k];
      if (t >= row.window_lo && t <= row.window_hi) o.rho.push_back((tr.H[0] - tr.H[k]) / t);
    }
    if (pr.coeffs) {
      const LyapCoeffs& c = *pr.coeffs;
      const double floor = 2 * c.a[0] * std::pow(std::max(c.h0, 1.0), c.gamma0);
      const double w0 = tr.W[0], root = std::pow(w0, 1.0 / c.gamma0);
      for (std::size_t k = 1; k < tr.W.size(); ++k) {
        if (tr.W[k - 1] > floor && tr.W[k] > tr.W[k - 1] * (1 + 1e-9)) o.w_monotone = false;
        o.c_w = std::min(o.c_w, (w0 - tr.W[k]) / (tr.times[k] * root));
      }
    }
  });

  for (std::size_t r = 0; r < rep.rows.size(); ++r) {
    DecayRow& row = rep.rows[r];
    if (row.window_empty) {
      row.rho = row.rho_se = row.rho_min = row.C_rho = row.C_W = nan;
      continue;
    }
    std::vector<double> last;
    row.t_end = std::numeric_limits<double>::infinity();
    row.in_window_samples = std::numeric_limits<int>::max();
    row.rho_min = std::numeric_limits<double>::infinity();
    row.C_W = std::numeric_limits<double>::infinity();
    for (std::size_t ji = 0; ji < jobs.size(); ++ji) {
      if (jobs[ji].row != r) continue;
      const TrajectoryOutcome& o = out[ji];
      row.t_end = std::min(row.t_end, o.t_reached);
      row.capped = row.capped || o.capped;
      row.capped_by_clock = row.capped_by_clock || o.by_clock;
      row.in_window_samples = std::min<int>(row.in_window_samples, o.rho.size());
      row.ledger_error = std::max(row.ledger_error, o.ledger);
      row.W_monotone = row.W_monotone && o.w_monotone;
      row.C_W = std::min(row.C_W, o.c_w);
      if (!o.rho.empty()) {
        last.push_back(o.rho.back());
        row.rho_min = std::min(row.rho_min, *std::min_element(o.rho.begin(), o.rho.end()));
      }
    }
    if (!pr.coeffs) row.C_W = nan;
    if (row.in_window_samples == 0 || last.empty()) {
      // the run never reached the window: partial result, no rate
      row.rho = row.rho_se = row.rho_min = row.C_rho = nan;
      continue;
    }
    row.rho = mean(last);
    row.rho_se = last.size() > 1 ? standard_error(last) : 0.0;
    row.C_rho = row.rho_min * std::pow(row.H0, decay_exp);
  }

  for (DecayFamily fam : pr.families) {
    DecayFamilyFit fit;
    fit.family = fam;
    fit.predicted = -decay_exp;
    std::vector<double> x, y;
    bool measured = true;
    fit.C_fit = std::numeric_limits<double>::infinity();
    for (const DecayRow& row : rep.rows) {
      if (row.family != fam || row.window_empty) continue;
      if (!(row.rho > 0) || !(row.C_rho > 0)) {
        measured = false;
        if (!std::isnan(row.C_rho)) fit.C_fit = std::min(fit.C_fit, row.C_rho);
        continue;
      }
      x.push_back(std::log(row.H0));
      y.push_back(std::log(row.rho));
      fit.C_fit = std::min(fit.C_fit, row.C_rho);
    }
    if (!std::isfinite(fit.C_fit)) fit.C_fit = nan;
    if (x.size() >= 2) fit.fit = fit_line(x, y);
    fit.bound_ok = measured && x.size() >= 2 && fit.C_fit > 0;
    fit.slope_in_range = x.size() >= 2 && fit.fit.slope >= fit.predicted - 0.4 && fit.fit.slope <= 0.0;
    rep.fits.push_back(fit);
  }
  rep.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return rep;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec, const Provenance* prov) {
  CsvWriter csv(os, {"t", "H", "W", "ledger"}, prov);
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    csv << rec.times[k] << rec.H[k];
    if (rec.W.empty())
      csv << "";
    else
      csv << rec.W[k];
    csv << rec.dissipated[k];
    csv.end_row();
  }
}

void write_generator_csv(std::ostream& os, const std::vector<GenReport>& reps, const Provenance* prov) {
  CsvWriter csv(os, {"target", "dt", "estimate", "se", "bias", "analytic", "lie", "diffusion", "bias_r2", "within_3se"},
                prov);
  for (const GenReport& r : reps)
    for (const GeneratorRow& row : r.rows) {
      csv << r.target << row.dt << row.estimate << row.se << row.bias << r.analytic << r.lie << r.diffusion
          << r.bias_fit.r2 << r.within_3se;
      csv.end_row();
    }
}

void write_decay_csv(std::ostream& os, const DecayReport& rep, const Provenance* prov) {
  CsvWriter csv(os,
                {"H0", "family", "window_lo", "window_hi", "window_empty", "t_end", "capped", "in_window_samples", "rho",
                 "rho_se", "rho_min", "C_rho", "ledger_error", "W_monotone", "C_W"},
                prov);
  for (const DecayRow& r : rep.rows) {
    csv << r.H0 << to_string(r.family) << r.window_lo << r.window_hi << r.window_empty << r.t_end
        << (r.capped_by_clock ? "clock" : r.capped ? "steps" : "no") << r.in_window_samples << r.rho << r.rho_se
        << r.rho_min << r.C_rho << r.ledger_error << r.W_monotone << r.C_W;
    csv.end_row();
  }
}

void write_decay_fit_csv(std::ostream& os, const DecayReport& rep, const Provenance* prov) {
  CsvWriter csv(os,
                {"family", "points", "slope", "slope_lo", "slope_hi", "predicted", "C_fit", "bound_ok", "slope_in_range"},
                prov);
  for (const DecayFamilyFit& f : rep.fits) {
    const bool ci = f.fit.n >= 3;
    csv << to_string(f.family) << f.fit.n << f.fit.slope << (ci ? f.fit.slope_lo() : nan)
        << (ci ? f.fit.slope_hi() : nan) << f.predicted << f.C_fit << f.bound_ok << f.slope_in_range;
    csv.end_row();
  }
}

}  // namespace lyapchain
