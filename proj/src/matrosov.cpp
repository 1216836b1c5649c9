#include "lyapchain/matrosov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lyapchain/csv.hpp"
#include "lyapchain/detail/parallel.hpp"
#include "lyapchain/detail/random.hpp"
#include "lyapchain/errors.hpp"
#include "lyapchain/jets.hpp"
#include "lyapchain/oscillator_analysis.hpp"
#include "lyapchain/sampling.hpp"
#include "lyapchain/stats.hpp"

namespace lyapchain {

namespace {

struct Cell {
  int i = 0;
  double t = 0.0;      ///< position in log u, 0 at w_i and 1 at w_{i+1}
  double dlogu = 0.0;  ///< log(u_{i+1} / u_i)
  double u = 0.0;
  bool above = false;
};

Cell locate(const MatrosovData& d, double w) {
  Cell c;
  const int n = d.cells();
  c.u = w - d.Q;
  const auto it = std::upper_bound(d.w.begin(), d.w.end(), w);
  c.i = std::clamp(static_cast<int>(it - d.w.begin()) - 1, 0, n - 1);
  const double u0 = d.w[c.i] - d.Q, u1 = d.w[c.i + 1] - d.Q;
  c.dlogu = std::log(u1 / u0);
  c.t = std::log(c.u / u0) / c.dlogu;
  c.above = w > d.w.back();
  return c;
}

// log-linear value and d/dw at a located point
double loglin(const std::vector<double>& f, const Cell& c, double* dfdw) {
  const double s = std::log(f[c.i + 1] / f[c.i]) / c.dlogu;
  const double v = f[c.i] * std::exp(s * c.t * c.dlogu);
  if (dfdw) *dfdw = v * s / c.u;
  return v;
}

double lerp_slope(const std::vector<double>& f, int i, double dlogu) { return std::log(f[i + 1] / f[i]) / dlogu; }

std::vector<double> lie_values(const ChainSpec& spec, const State& s, int kmax) {
  return energy_lie_derivatives(spec, s, kmax).values;
}

}  // namespace

std::vector<double> energy_grid(double Q, double eps, double w_max, int levels_per_decade) {
  const double u0 = eps / 2, u1 = w_max - Q;
  if (!(eps > 0) || !(u1 > u0) || levels_per_decade < 1) throw std::invalid_argument("bad energy grid");
  const int n = std::max(1, static_cast<int>(std::ceil(std::log10(u1 / u0) * levels_per_decade)));
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = Q + u0 * std::pow(u1 / u0, static_cast<double>(i) / n);
  w[n] = w_max;
  return w;
}

Envelopes estimate_envelopes(const ChainSpec& spec, int r, const std::vector<double>& grid, const MatrosovConfig& cfg) {
  const std::size_t n = grid.size();
  Envelopes e;
  e.raw_m.assign(n, std::numeric_limits<double>::infinity());
  e.raw_M.assign(n, 0.0);
  std::vector<int> counts(n, 0);
  const LevelSampler sampler(spec);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    SplitMix64 rng = stream(cfg.seed, i, 61);
    for (int j = 0; j < cfg.samples_per_level; ++j) {
      const LevelFamily fam = kLevelFamilies[j % std::size(kLevelFamilies)];
      const auto s = sampler.sample(grid[i], fam, rng);
      if (!s) continue;
      const std::vector<double> L = lie_values(spec, *s, r + 1);
      double m = std::abs(L[1]), M = 0.0;
      for (int k = 2; k <= r; ++k) m += L[k] * L[k];
      for (int k = 1; k <= r + 1; ++k) M = std::max(M, std::abs(L[k]));
      e.raw_m[i] = std::min(e.raw_m[i], m);
      e.raw_M[i] = std::max(e.raw_M[i], M);
      ++counts[i];
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] == 0) throw std::runtime_error("no level-set sample at w = " + format_double(grid[i]));
    const double M = e.raw_M[i];
    if (e.raw_m[i] <= cfg.degenerate_tol * (M + M * M)) {
      std::ostringstream os;
      os << "sampled m(w) vanishes at w = " << grid[i] << " (m = " << e.raw_m[i] << ", M = " << M
         << "): the Lie derivatives of W up to order " << r << " have a common zero on this level";
      throw EnvelopeDegenerate(os.str(), grid[i]);
    }
  }
  e.phi.resize(n);
  e.Phi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i ? i - 1 : 0, hi = std::min(n - 1, i + 1);
    double m = e.raw_m[i], M = e.raw_M[i];
    for (std::size_t j = lo; j <= hi; ++j) {
      m = std::min(m, e.raw_m[j]);
      M = std::max(M, e.raw_M[j]);
    }
    e.Phi[i] = cfg.Phi_safety * M;
    e.phi[i] = std::min(cfg.phi_safety * m, e.Phi[i] * e.Phi[i]);
  }
  return e;
}

std::vector<std::vector<double>> b_tables_closed(const std::vector<double>& phi, const std::vector<double>& Phi,
                                                 int r) {
  std::vector<std::vector<double>> B(r + 1);
  for (int k = 2; k <= r; ++k) {
    B[k].resize(phi.size());
    const double c = std::pow(2.0, static_cast<double>((r - k) * (r - k + 1)));
    for (std::size_t i = 0; i < phi.size(); ++i) B[k][i] = c * std::pow(Phi[i] * Phi[i] / phi[i], r - k);
  }
  return B;
}

std::vector<std::vector<double>> b_tables_recursive(const std::vector<double>& phi, const std::vector<double>& Phi,
                                                    int r) {
  const std::size_t n = phi.size();
  std::vector<std::vector<double>> B(r + 1);
  B[r].assign(n, 1.0);
  if (r - 1 >= 2) {
    B[r - 1].resize(n);
    for (std::size_t i = 0; i < n; ++i) B[r - 1][i] = 4.0 * Phi[i] * Phi[i] / phi[i];
  }
  for (int k = r - 1; k >= 3; --k) {
    B[k - 1].resize(n);
    for (std::size_t i = 0; i < n; ++i) B[k - 1][i] = 4.0 * B[k][i] * B[k][i] / B[k + 1][i];
  }
  return B;
}

void build_A(MatrosovData& d, double infl) {
  const int n = d.cells();
  d.A.assign(n + 1, 0.0);
  d.A_slope.assign(n, 0.0);
  // every term below is a power of u on a cell, so its sup over the cell sits at an end
  const auto ends = [](double a, double b) { return std::max(a, b); };
  double g0 = 0.0;
  for (int k = 2; k <= d.r; ++k) g0 += d.B[k][0] * d.Phi[0] * d.Phi[0];
  d.A[0] = g0 + (d.w[0] - d.Q - d.eps);
  for (int i = 0; i < n; ++i) {
    const double u0 = d.w[i] - d.Q, u1 = d.w[i + 1] - d.Q, dl = std::log(u1 / u0);
    const double sP = lerp_slope(d.Phi, i, dl);
    double rhs = 1.0, gprime = 0.0;
    rhs += ends(d.Phi[i] * d.B[2][i], d.Phi[i + 1] * d.B[2][i + 1]);
    for (int k = 2; k <= d.r; ++k) {
      const double sB = lerp_slope(d.B[k], i, dl);
      const double left = d.B[k][i] * d.Phi[i] * d.Phi[i], right = d.B[k][i + 1] * d.Phi[i + 1] * d.Phi[i + 1];
      // Phi^2 |B_k'| with B_k' = B_k s / u
      rhs += infl * ends(left * std::abs(sB) / u0, right * std::abs(sB) / u1);
      // (B_k Phi^2)' = B_k Phi^2 (s_B + 2 s_Phi) / u, only the positive part can raise the floor
      gprime += std::max(0.0, ends(left * (sB + 2 * sP) / u0, right * (sB + 2 * sP) / u1));
    }
    // the relative factor keeps A' strictly above the bound once the bound dwarfs the +1
    d.A_slope[i] = std::max(rhs + 1.0, gprime + 1.0) * (1.0 + 1e-9);
    d.A[i + 1] = d.A[i] + d.A_slope[i] * (d.w[i + 1] - d.w[i]);
  }
}

MatrosovData build_matrosov(const ChainSpec& spec, const MatrosovConfig& cfg) {
  MatrosovData d;
  d.r = cfg.r;
  if (d.r <= 0) {
    if (spec.kind == ChainKind::Oscillator) {
      const OscillatorValidationReport v = validate_oscillator_potentials(spec);
      if (!v.pass) throw std::invalid_argument("potentials fail validation: " + v.message);
      d.r = v.threshold;
      d.note = std::string("r from ") + to_string(v.cls) + " threshold";
    } else {
      d.r = 4 * spec.n - 3;
      d.note = "rotator default r = 4N-3 differs from the oscillator thresholds 4N-1 and 3*2^(N+1)-5";
    }
  }
  if (d.r < 2) throw std::invalid_argument("Matrosov construction needs r >= 2");
  d.Q = cfg.Q;
  d.eps = cfg.eps;
  d.w_max = cfg.w_max;
  d.levels_per_decade = cfg.levels_per_decade;
  d.w = energy_grid(cfg.Q, cfg.eps, cfg.w_max, cfg.levels_per_decade);
  Envelopes e = estimate_envelopes(spec, d.r, d.w, cfg);
  d.raw_m = std::move(e.raw_m);
  d.raw_M = std::move(e.raw_M);
  d.phi = std::move(e.phi);
  d.Phi = std::move(e.Phi);
  d.B = b_tables_closed(d.phi, d.Phi, d.r);
  build_A(d, cfg.derivative_inflation);
  return d;
}

std::string check_tables(const MatrosovData& d) {
  const int r = d.r;
  const std::size_t n = d.w.size();
  std::ostringstream os;
  const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
  const auto rec = b_tables_recursive(d.phi, d.Phi, r);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(d.phi[i] > 0) || !(d.Phi[i] > 0)) os << "non-positive envelope at w = " << d.w[i];
    else if (d.phi[i] > d.Phi[i] * d.Phi[i]) os << "phi > Phi^2 at w = " << d.w[i];
    else if (d.B[r][i] != 1.0) os << "B_r != 1 at w = " << d.w[i];
    else if (r - 1 >= 2 && rel(d.B[r - 1][i], 4 * d.Phi[i] * d.Phi[i] / d.phi[i]) > 1e-12)
      os << "B_{r-1} != 4 Phi^2 / phi at w = " << d.w[i];
    if (!os.str().empty()) return os.str();
    for (int k = 2; k <= r; ++k) {
      if (d.B[k][i] < 1.0) os << "B_" << k << " < 1 at w = " << d.w[i];
      else if (rel(d.B[k][i], rec[k][i]) > 1e-12) os << "closed form and recursion differ for B_" << k << " at w = " << d.w[i];
      else if (k >= 3 && k <= r - 1 && d.B[k][i] > std::sqrt(d.B[k - 1][i] * d.B[k + 1][i]) / 2 * (1 + 1e-12))
        os << "mean inequality fails for B_" << k << " at w = " << d.w[i];
      if (!os.str().empty()) return os.str();
    }
  }
  for (int i = 0; i < d.cells(); ++i) {
    // A' > 0 is what makes A strictly increasing; once A is astronomically large the stored
    // values can only be non-decreasing at double precision
    if (!(d.A_slope[i] > 0) || d.A[i + 1] < d.A[i]) {
      os << "A not increasing on cell " << i;
      return os.str();
    }
    // A' against the bound at both ends of the cell, with the table derivatives of that cell
    const double dl = std::log((d.w[i + 1] - d.Q) / (d.w[i] - d.Q));
    for (int side = 0; side <= 1; ++side) {
      const std::size_t j = i + side;
      const double u = d.w[j] - d.Q;
      double rhs = d.Phi[j] * d.B[2][j] + 1.0;
      for (int k = 2; k <= r; ++k) rhs += d.Phi[j] * d.Phi[j] * std::abs(d.B[k][j] * lerp_slope(d.B[k], i, dl) / u);
      if (!(d.A_slope[i] > rhs)) {
        os << "A' below the error bound on cell " << i;
        return os.str();
      }
    }
  }
  return {};
}

double cutoff(const MatrosovData& d, double w, double* derivative) {
  const double half = d.eps / 2;
  const double s = std::clamp((w - d.Q - half) / half, 0.0, 1.0);
  if (derivative) *derivative = (s > 0 && s < 1) ? 6 * s * (1 - s) / half : 0.0;
  return s * s * (3 - 2 * s);
}

TableValue lookup(const MatrosovData& d, double w) {
  TableValue v;
  const Cell c = locate(d, w);
  v.extrapolated = c.above;
  v.phi = loglin(d.phi, c, nullptr);
  v.Phi = loglin(d.Phi, c, nullptr);
  v.B.assign(d.r + 1, 0.0);
  v.B_prime.assign(d.r + 1, 0.0);
  for (int k = 2; k <= d.r; ++k) v.B[k] = loglin(d.B[k], c, &v.B_prime[k]);
  v.A_prime = d.A_slope[c.i];
  v.A = d.A[c.i] + v.A_prime * (w - d.w[c.i]);
  return v;
}

double eval_Wsharp(const ChainSpec& spec, const MatrosovData& d, const State& s, bool* extrapolated) {
  const double w = energy(spec, s);
  if (extrapolated) *extrapolated = false;
  if (w <= d.Q + d.eps / 2) return 0.0;
  const std::vector<double> L = lie_values(spec, s, d.r);
  const TableValue t = lookup(d, w);
  if (extrapolated) *extrapolated = t.extrapolated;
  double raw = t.A;
  for (int k = 2; k <= d.r; ++k) raw -= t.B[k] * L[k - 1] * L[k];
  return cutoff(d, w) * raw;
}

double lie_Wsharp(const ChainSpec& spec, const MatrosovData& d, const State& s) {
  const double w = energy(spec, s);
  if (w <= d.Q + d.eps / 2) return 0.0;
  const int r = d.r;
  const std::vector<double> L = lie_values(spec, s, r + 1);
  const TableValue t = lookup(d, w);
  double raw = t.A, lraw = t.A_prime * L[1];
  for (int k = 2; k <= r; ++k) {
    raw -= t.B[k] * L[k - 1] * L[k];
    lraw -= t.B_prime[k] * L[1] * L[k - 1] * L[k] + t.B[k] * (L[k] * L[k] + L[k - 1] * L[k + 1]);
  }
  double dchi = 0.0;
  const double chi = cutoff(d, w, &dchi);
  return dchi * L[1] * raw + chi * lraw;
}

CertReport certify_strictness(const ChainSpec& spec, const MatrosovData& d, const CertConfig& cfg) {
  CertReport rep;
  rep.samples = cfg.samples;
  rep.rows.resize(cfg.samples);
  const LevelSampler sampler(spec);
  const double u0 = d.eps / 2, u1 = d.w_max - d.Q;
  parallel_for(cfg.samples, cfg.threads, [&](std::size_t i) {
    SplitMix64 rng = stream(cfg.seed, i, 71);
    const double u = u0 * std::pow(u1 / u0, (static_cast<double>(i) + rng.uniform()) / cfg.samples);
    const double w = d.Q + u;
    std::optional<State> s = sampler.sample(w, kLevelFamilies[i % std::size(kLevelFamilies)], rng);
    while (!s) s = sampler.sample(w, LevelFamily::Generic, rng);
    CertSample& row = rep.rows[i];
    row.s = *s;
    row.w = energy(spec, *s);
    row.lie = lie_Wsharp(spec, d, *s);
    row.margin = row.lie + lookup(d, row.w).phi / 4;
  });
  rep.max_margin = -std::numeric_limits<double>::infinity();
  rep.min_proper_gap = std::numeric_limits<double>::infinity();
  for (const CertSample& row : rep.rows) {
    if (row.w <= d.Q + d.eps) {
      ++rep.excluded_band;
      continue;
    }
    ++rep.checked;
    rep.max_margin = std::max(rep.max_margin, row.margin);
    rep.min_proper_gap = std::min(rep.min_proper_gap, eval_Wsharp(spec, d, row.s) - (row.w - d.Q - d.eps));
    if (row.margin > 0) {
      ++rep.failures;
      if (static_cast<int>(rep.failed.size()) < cfg.keep_failures) rep.failed.push_back(row);
    }
  }
  rep.pass = rep.checked > 0 && rep.failures == 0;
  return rep;
}

void save_matrosov(const MatrosovData& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream meta(dir / "meta.txt");
    meta << "format = lyapchain-matrosov\n"
         << "version = " << d.version << "\n"
         << "r = " << d.r << "\n"
         << "Q = " << format_double(d.Q) << "\n"
         << "eps = " << format_double(d.eps) << "\n"
         << "w_max = " << format_double(d.w_max) << "\n"
         << "levels_per_decade = " << d.levels_per_decade << "\n"
         << "levels = " << d.w.size() << "\n"
         << "note = " << d.note << "\n";
    if (!meta) throw std::runtime_error("cannot write " + (dir / "meta.txt").string());
  }
  std::ofstream out(dir / "tables.csv");
  std::vector<std::string> header{"w", "raw_m", "raw_M", "phi", "Phi", "A", "A_slope"};
  for (int k = 2; k <= d.r; ++k) header.push_back("B" + std::to_string(k));
  CsvWriter csv(out, header);
  for (std::size_t i = 0; i < d.w.size(); ++i) {
    csv << d.w[i] << d.raw_m[i] << d.raw_M[i] << d.phi[i] << d.Phi[i] << d.A[i]
        << (i < d.A_slope.size() ? d.A_slope[i] : 0.0);
    for (int k = 2; k <= d.r; ++k) csv << d.B[k][i];
    csv.end_row();
  }
  if (!out) throw std::runtime_error("cannot write " + (dir / "tables.csv").string());
}

MatrosovData load_matrosov(const std::filesystem::path& dir) {
  std::ifstream meta(dir / "meta.txt");
  if (!meta) throw std::runtime_error("cannot read " + (dir / "meta.txt").string());
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  const auto need = [&](const std::string& k) {
    const auto it = kv.find(k);
    if (it == kv.end()) throw std::runtime_error("meta.txt lacks '" + k + "'");
    return it->second;
  };
  if (need("format") != "lyapchain-matrosov") throw std::runtime_error("not a Matrosov table directory");
  MatrosovData d;
  d.version = std::stoi(need("version"));
  if (d.version != 1) throw std::runtime_error("unsupported table version " + std::to_string(d.version));
  d.r = std::stoi(need("r"));
  d.Q = std::strtod(need("Q").c_str(), nullptr);
  d.eps = std::strtod(need("eps").c_str(), nullptr);
  d.w_max = std::strtod(need("w_max").c_str(), nullptr);
  d.levels_per_decade = std::stoi(need("levels_per_decade"));
  d.note = kv.count("note") ? kv["note"] : "";
  const std::size_t levels = std::stoul(need("levels"));

  std::ifstream in(dir / "tables.csv");
  if (!in) throw std::runtime_error("cannot read " + (dir / "tables.csv").string());
  d.B.assign(d.r + 1, {});
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> v;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::strtod(cell.c_str(), nullptr));
    if (static_cast<int>(v.size()) != 7 + d.r - 1) throw std::runtime_error("tables.csv: wrong column count");
    d.w.push_back(v[0]);
    d.raw_m.push_back(v[1]);
    d.raw_M.push_back(v[2]);
    d.phi.push_back(v[3]);
    d.Phi.push_back(v[4]);
    d.A.push_back(v[5]);
    d.A_slope.push_back(v[6]);
    for (int k = 2; k <= d.r; ++k) d.B[k].push_back(v[5 + k]);
  }
  if (d.w.size() != levels || levels < 2) throw std::runtime_error("tables.csv: wrong number of levels");
  d.A_slope.pop_back();
  return d;
}

}  // namespace lyapchain
