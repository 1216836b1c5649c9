#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lyapchain/csv.hpp"
#include "lyapchain/detail/random.hpp"
#include "lyapchain/errors.hpp"
#include "lyapchain/sim.hpp"

namespace lyapchain::cli {

namespace {

std::string line_of(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  if (m.line < 0) return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

template <class T>
const char* type_name() {
  if constexpr (std::is_same_v<T, double>) return "a number";
  if constexpr (std::is_same_v<T, int> || std::is_same_v<T, long>) return "an integer";
  if constexpr (std::is_same_v<T, std::uint64_t>) return "a non-negative integer";
  if constexpr (std::is_same_v<T, bool>) return "true or false";
  if constexpr (std::is_same_v<T, std::string>) return "a string";
  if constexpr (std::is_same_v<T, std::vector<double>>) return "a list of numbers";
  if constexpr (std::is_same_v<T, std::vector<int>>) return "a list of integers";
  if constexpr (std::is_same_v<T, std::vector<std::string>>) return "a list of strings";
  return "a value";
}

template <class T>
T convert(const YAML::Node& n, const std::string& field) {
  if constexpr (std::is_same_v<T, std::vector<double>> || std::is_same_v<T, std::vector<int>> ||
                std::is_same_v<T, std::vector<std::string>>) {
    if (!n.IsSequence()) Block::fail_at(n, field, std::string("expected ") + type_name<T>());
  } else if (!n.IsScalar()) {
    Block::fail_at(n, field, std::string("expected ") + type_name<T>());
  }
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    Block::fail_at(n, field, std::string("expected ") + type_name<T>());
  }
}

}  // namespace

Block::Block(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
  if (defined() && !node_.IsMap()) fail_at(node_, path_, "expected a mapping");
}

bool Block::has(const std::string& key) const { return defined() && node_[key].IsDefined() && !node_[key].IsNull(); }

void Block::fail(const std::string& key, const std::string& what) const {
  const YAML::Node n = has(key) ? node_[key] : node_;
  fail_at(n, field(key), what);
}

void Block::fail_at(const YAML::Node& node, const std::string& field, const std::string& what) {
  throw ConfigError((field.empty() ? std::string("<root>") : field) + line_of(node) + ": " + what);
}

template <class T>
T Block::get(const std::string& key, T fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  return convert<T>(node_[key], field(key));
}

template <class T>
T Block::require(const std::string& key) {
  seen_.insert(key);
  if (!has(key)) fail(key, "required field is missing");
  return convert<T>(node_[key], field(key));
}

template <class T>
std::optional<T> Block::maybe(const std::string& key) {
  seen_.insert(key);
  if (!has(key)) return std::nullopt;
  return convert<T>(node_[key], field(key));
}

Block Block::sub(const std::string& key) {
  seen_.insert(key);
  return Block(has(key) ? node_[key] : YAML::Node(), field(key));
}

YAML::Node Block::raw(const std::string& key) {
  seen_.insert(key);
  return has(key) ? node_[key] : YAML::Node();
}

void Block::finish() const {
  if (!defined()) return;
  for (const auto& kv : node_) {
    const std::string key = kv.first.as<std::string>();
    if (!seen_.count(key)) fail_at(kv.first, field(key), "unknown field");
  }
}

#define LYAPCHAIN_BLOCK_TYPES(X) \
  X(double)                      \
  X(int)                         \
  X(long)                        \
  X(std::uint64_t)               \
  X(bool)                        \
  X(std::string)                 \
  X(std::vector<double>)         \
  X(std::vector<int>)            \
  X(std::vector<std::string>)
#define X(T)                                                   \
  template T Block::get<T>(const std::string&, T);             \
  template T Block::require<T>(const std::string&);            \
  template std::optional<T> Block::maybe<T>(const std::string&);
LYAPCHAIN_BLOCK_TYPES(X)
#undef X

const std::vector<std::string>& top_level_keys() {
  static const std::vector<std::string> keys{
      "description", "seed",     "threads",    "output",        "wall_clock_minutes", "chain",
      "state",       "coeffs",   "simulate",   "simulate_sde",  "calibration",        "verify",
      "matrosov",    "certify",  "equilibria", "order_stats",   "decay_scan",         "generator_check"};
  return keys;
}

Potential parse_potential(Block& b) {
  int forms = b.has("trig") + b.has("poly") + b.has("mixed");
  if (forms != 1) b.fail("", "a potential needs exactly one of trig, poly, mixed");
  Potential pot;
  if (b.has("poly")) {
    pot = Potential::polynomial(b.require<std::vector<double>>("poly"));
  } else if (b.has("trig")) {
    Block t = b.sub("trig");
    pot = Potential::trig(t.get<double>("c0", 0.0), t.get<std::vector<double>>("cos", {}),
                          t.get<std::vector<double>>("sin", {}));
    t.finish();
  } else {
    Block m = b.sub("mixed");
    pot = Potential::mixed(m.get<std::vector<double>>("poly", {}), m.get<std::vector<double>>("cos", {}),
                           m.get<std::vector<double>>("sin", {}));
    m.finish();
  }
  b.finish();
  return pot;
}

namespace {

// a single mapping is repeated `count` times, a list must have exactly `count` entries
std::vector<Potential> parse_potential_list(YAML::Node node, const std::string& field, int count) {
  std::vector<Potential> out;
  if (node.IsMap()) {
    Block b(node, field);
    const Potential p = parse_potential(b);
    out.assign(count, p);
  } else if (node.IsSequence()) {
    if (static_cast<int>(node.size()) != count)
      Block::fail_at(node, field, "expected " + std::to_string(count) + " potentials, got " + std::to_string(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) {
      Block b(node[i], field + "[" + std::to_string(i) + "]");
      out.push_back(parse_potential(b));
    }
  } else {
    Block::fail_at(node, field, "expected a potential or a list of potentials");
  }
  return out;
}

}  // namespace

ChainSpec parse_chain(Block b) {
  if (!b.defined()) b.fail("", "chain block is missing");
  const std::string kind = b.require<std::string>("kind");
  const int n = b.require<int>("n");
  if (n < 2) b.fail("n", "need at least two particles");
  const YAML::Node inter = b.raw("interaction");
  if (!inter.IsDefined()) b.fail("interaction", "required field is missing");
  const std::vector<Potential> v = parse_potential_list(inter, b.path() + ".interaction", n - 1);
  ChainSpec spec;
  if (kind == "rotator") {
    const bool normalize = b.get<bool>("normalize", true);
    std::vector<Potential> vv = v;
    if (normalize)
      for (Potential& p : vv) p = normalize_rotor_potential(p);
    spec = ChainSpec::rotator(vv);
  } else if (kind == "oscillator") {
    const YAML::Node pin = b.raw("pinning");
    if (!pin.IsDefined()) b.fail("pinning", "required for oscillator chains");
    spec = ChainSpec::oscillator(parse_potential_list(pin, b.path() + ".pinning", n), v);
  } else {
    b.fail("kind", "expected rotator or oscillator, got '" + kind + "'");
  }
  const std::vector<int> damped = b.get<std::vector<int>>("damping", {1});
  spec.damping.assign(n, false);
  for (int j : damped) {
    if (j < 1 || j > n) b.fail("damping", "particle index " + std::to_string(j) + " outside 1.." + std::to_string(n));
    spec.damping[j - 1] = true;
  }
  const std::vector<double> temps = b.get<std::vector<double>>("temperatures", {});
  spec.temperatures.assign(n, 0.0);
  if (!temps.empty()) {
    if (temps.size() != damped.size()) b.fail("temperatures", "one temperature per damped particle");
    for (std::size_t i = 0; i < temps.size(); ++i) {
      if (temps[i] < 0) b.fail("temperatures", "temperatures must be non-negative");
      spec.temperatures[damped[i] - 1] = temps[i];
    }
  }
  b.finish();
  try {
    spec.check();
  } catch (const std::invalid_argument& e) {
    b.fail("", e.what());
  }
  return spec;
}

State parse_state(Block b, const ChainSpec& spec, std::uint64_t seed) {
  if (!b.defined()) b.fail("", "state block is missing");
  State s;
  if (b.has("p") || b.has("q")) {
    s.p = b.require<std::vector<double>>("p");
    s.q = b.require<std::vector<double>>("q");
    if (static_cast<int>(s.p.size()) != spec.n || static_cast<int>(s.q.size()) != spec.n)
      b.fail("p", "p and q need " + std::to_string(spec.n) + " entries");
  } else {
    const double h0 = b.require<double>("H0");
    const std::string fam = b.get<std::string>("family", "fast_rotator");
    if (spec.kind != ChainKind::Rotator) b.fail("H0", "energy-level initial states are only defined for rotators");
    DecayFamily f;
    try {
      f = decay_family_from_string(fam);
    } catch (const std::invalid_argument& e) {
      b.fail("family", e.what());
    }
    SplitMix64 rng(stream_seed(seed, 0, 17));
    try {
      s = decay_initial_state(spec, h0, f, rng);
    } catch (const std::invalid_argument& e) {
      b.fail("H0", e.what());
    }
  }
  b.finish();
  return s;
}

LyapCoeffs parse_coeffs(Block b, const std::filesystem::path& base_dir) {
  if (!b.defined()) b.fail("", "coeffs block is missing");
  if (b.has("file")) {
    const std::filesystem::path p = base_dir / b.require<std::string>("file");
    b.finish();
    std::ifstream in(p);
    if (!in) b.fail("file", "cannot read " + p.string());
    YAML::Node root;
    try {
      root = YAML::Load(in);
    } catch (const YAML::Exception& e) {
      throw ConfigError(p.string() + ": " + e.what());
    }
    return parse_coeffs(Block(root["coeffs"], p.filename().string() + ":coeffs"), p.parent_path());
  }
  std::vector<double> a = b.require<std::vector<double>>("a");
  LyapCoeffs c;
  try {
    c = LyapCoeffs::make(static_cast<int>(a.size() + 1) / 2, a);
  } catch (const std::invalid_argument& e) {
    b.fail("a", e.what());
  }
  c.C1 = b.get<double>("C1", 0.0);
  c.h0 = b.get<double>("h0", 1.0);
  b.finish();
  return c;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& path) {
  ExperimentConfig cfg;
  cfg.path = path;
  cfg.hash = hex64(fnv1a(text));
  try {
    cfg.root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(path.string() + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!cfg.root.IsMap()) throw ConfigError(path.string() + ": the top level must be a mapping");
  for (const auto& kv : cfg.root) {
    const std::string key = kv.first.as<std::string>();
    if (std::find(top_level_keys().begin(), top_level_keys().end(), key) == top_level_keys().end())
      Block::fail_at(kv.first, key, "unknown field");
  }
  Block top(cfg.root, "");
  cfg.seed = top.get<std::uint64_t>("seed", 1);
  cfg.threads = top.get<int>("threads", 1);
  if (cfg.threads < 1) top.fail("threads", "must be at least 1");
  cfg.output = top.get<std::string>("output", "out");
  cfg.wall_clock_minutes = top.get<double>("wall_clock_minutes", 0.0);
  if (top.has("chain")) cfg.chain = parse_chain(top.sub("chain"));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace lyapchain::cli
