#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace lyapchain::cli;
  CLI::App app{"lyapchain: Lyapunov functions and energy decay for damped rotor and oscillator chains"};
  std::string command, config;
  Overrides ov;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
  double wall = 0;

  std::string cmds;
  for (const auto& c : commands()) cmds += (cmds.empty() ? "" : ", ") + c;
  app.add_option("command", command, "one of: " + cmds)->required()->check(CLI::IsMember(commands()));
  app.add_option("-c,--config", config, "experiment config (YAML)")->required();
  auto* o_seed = app.add_option("--seed", seed, "override the config seed");
  auto* o_out = app.add_option("-o,--out", out, "output directory (beats LYAPCHAIN_OUT and the config)");
  auto* o_thr = app.add_option("-j,--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* o_wall = app.add_option("--wall-clock", wall, "wall clock budget in minutes")->check(CLI::NonNegativeNumber);
  bool no_time = false;
  app.add_flag("--no-timestamp", no_time, "leave the time out of the provenance line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }
  if (*o_seed) ov.seed = seed;
  if (*o_out) ov.out = out;
  if (*o_thr) ov.threads = threads;
  if (*o_wall) ov.wall_clock_minutes = wall;
  ov.timestamp = !no_time;
  return run(command, config, ov, std::cout);
}
