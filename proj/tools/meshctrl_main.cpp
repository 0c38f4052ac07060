// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "meshctrl/errors.hpp"
#include "meshctrl/expcli.hpp"

using namespace meshctrl;

int main(int argc, char** argv) {
  CLI::App app{"meshctrl: stochastic optimal control experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory (default from config)");
    sub->add_option("--seed", seed, "RNG seed override")->each([&](const std::string&) {
      seed_set = true;
    });
  };

  CLI::App* run = app.add_subcommand("run", "solve one benchmark instance");
  CLI::App* converge = app.add_subcommand("converge", "error decay over an N list");
  CLI::App* compare = app.add_subcommand("compare", "two methods side by side");
  CLI::App* interp = app.add_subcommand("interp-bench", "interpolation accuracy study");
  for (CLI::App* sub : {run, converge, compare, interp}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = parse_config_file(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed_set) cfg.seed = seed;

    if (run->parsed()) return cmd_run(cfg);
    if (converge->parsed()) return cmd_converge(cfg);
    if (compare->parsed()) return cmd_compare(cfg);
    if (interp->parsed()) return cmd_interp_bench(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
