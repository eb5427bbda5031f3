#include "vcbc/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"vcbc: flexible-joint robot tracking with virtual-system contraction"};
  app.require_subcommand(1);

  vcbc::cli::Options opts;
  std::string out;
  double dt = 0.0;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "output directory");
    sub->add_option("--dt", dt, "integration step in seconds (overrides the config)");
    sub->add_option("--seed", seed, "seed for randomized certificate sampling");
  };

  std::string cfg, cfg_b;
  auto* simulate = app.add_subcommand("simulate", "run the closed loop and write the log");
  simulate->add_option("config", cfg, "run config (TOML)")->required();
  add_common(simulate);
  auto* verify = app.add_subcommand("verify", "check the contraction certificates");
  verify->add_option("config", cfg, "run config (TOML)")->required();
  add_common(verify);
  auto* compare = app.add_subcommand("compare", "run two configs and compare metrics");
  compare->add_option("config_a", cfg, "first config")->required();
  compare->add_option("config_b", cfg_b, "second config")->required();
  add_common(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : vcbc::cli::kUsage;
  }

  for (auto* sub : {simulate, verify, compare}) {
    if (!sub->parsed()) continue;
    opts.out = out;
    if (sub->count("--dt")) opts.dt = dt;
    if (sub->count("--seed")) opts.seed = seed;
  }
  try {
    if (simulate->parsed()) return vcbc::cli::cmd_simulate(cfg, opts, std::cout, std::cerr);
    if (verify->parsed()) return vcbc::cli::cmd_verify(cfg, opts, std::cout, std::cerr);
    return vcbc::cli::cmd_compare(cfg, cfg_b, opts, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return vcbc::cli::kSimulationAbort;
  }
}
