#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "lyapchain/chain.hpp"
#include "lyapchain/lyapunov_rotor.hpp"

namespace lyapchain::cli {

/// Strict view of one YAML mapping: every read is type-checked, and finish() rejects keys that
/// nobody asked for. Errors name the dotted field path and the 1-based source line.
class Block {
 public:
  Block() = default;
  Block(YAML::Node node, std::string path);

  bool has(const std::string& key) const;
  bool defined() const { return node_.IsDefined() && !node_.IsNull(); }

  template <class T>
  T get(const std::string& key, T fallback);
  template <class T>
  T require(const std::string& key);
  template <class T>
  std::optional<T> maybe(const std::string& key);

  Block sub(const std::string& key);
  YAML::Node raw(const std::string& key);
  void finish() const;

  const std::string& path() const { return path_; }
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
  [[noreturn]] static void fail_at(const YAML::Node& node, const std::string& field, const std::string& what);

 private:
  std::string field(const std::string& key) const {
    if (key.empty()) return path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

struct ExperimentConfig {
  std::filesystem::path path;
  std::string hash;  ///< FNV-1a of the file bytes
  std::uint64_t seed = 1;
  int threads = 1;
  std::filesystem::path output = "out";
  double wall_clock_minutes = 0.0;
  std::optional<ChainSpec> chain;
  YAML::Node root;
};

/// Parses the top level and the chain block; command blocks are read by the commands themselves.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& path = "<string>");
ExperimentConfig load_config(const std::filesystem::path& path);

Potential parse_potential(Block& b);
ChainSpec parse_chain(Block b);
State parse_state(Block b, const ChainSpec& spec, std::uint64_t seed);
LyapCoeffs parse_coeffs(Block b, const std::filesystem::path& base_dir);

/// All top-level keys a config may carry.
const std::vector<std::string>& top_level_keys();

}  // namespace lyapchain::cli
