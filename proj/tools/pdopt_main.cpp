#include "pdopt/harness.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Product-distribution optimizer for categorical problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;

  CLI::App* run_cmd = app.add_subcommand(
      "run", "Anneal a product distribution and write trace/summary files");
  run_cmd->add_option("--config", config_path, "Run config JSON")->required();
  run_cmd->add_option("--seed", seed, "Override the config's master seed")
      ->each([&](const std::string&) { seed_given = true; });
  run_cmd->add_option("--out", out_dir, "Override the config's output directory");

  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle", "Print exact expectations and canonical marginals for a config");
  oracle_cmd->add_option("--config", config_path, "Run config JSON")->required();

  std::string suite;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Run a benchmark suite and print its report");
  bench_cmd->add_option("--suite", suite, "Suite name (aging, bit-variance)")
      ->required();
  bench_cmd->add_option("--seed", seed, "Benchmark seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      pdopt::RunConfig config = pdopt::load_run_config(config_path);
      if (seed_given) config.master_seed = seed;
      if (!out_dir.empty()) config.out_dir = out_dir;
      const pdopt::RunResult result = pdopt::run_and_write(config);
      std::cout << pdopt::summary_json(result) << "\n";
    } else if (oracle_cmd->parsed()) {
      const pdopt::RunConfig config = pdopt::load_run_config(config_path);
      std::cout << pdopt::oracle_report(config) << "\n";
    } else if (bench_cmd->parsed()) {
      std::cout << pdopt::bench_report(suite, seed) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
