// Command-line driver: run experiments, check configs, emit synthetic data and
// run the decomposition oracle suite.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bfarl/bias.hpp"
#include "bfarl/data_io.hpp"
#include "bfarl/error.hpp"
#include "bfarl/harness.hpp"
#include "bfarl/oracle.hpp"
#include "bfarl/synthetic.hpp"

namespace {

void print_aggregate(const bfarl::ExperimentResult& result) {
  std::printf("%-5s %-10s %-7s %-18s %-18s %-18s\n", "cell", "grid", "method", "F1", "DEO",
              "p%");
  for (const auto& row : result.aggregate)
    std::printf("%-5zu %-10.4g %-7s %.4f +- %.4f    %.4f +- %.4f    %.4f +- %.4f\n", row.cell,
                row.grid_value, bfarl::to_string(row.method).c_str(), row.mean[0], row.stddev[0],
                row.mean[1], row.stddev[1], row.mean[2], row.stddev[2]);
  for (const auto& p : result.curve)
    std::printf("|beta|=%-8.4g F1 %.4f +- %.4f  p%% %.4f +- %.4f\n", p.norm, p.mean[0],
                p.stddev[0], p.mean[2], p.stddev[2]);
  for (const auto& f : result.failures)
    std::fprintf(stderr, "cell %zu (grid %g) split %zu failed: %s\n", f.cell, f.grid_value,
                 f.split_id, f.error.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bias-tolerant fair classification experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::size_t jobs = 1;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the base seed");
  run->add_option("--out-dir", out_dir, "Override the output directory");
  run->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "Suppress the summary table");

  auto* validate = app.add_subcommand("validate-config", "Parse a config and print its canonical form");
  validate->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  bfarl::SyntheticConfig synth;
  std::string synth_out;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic dataset as CSV");
  gen->add_option("--n", synth.n, "Rows");
  gen->add_option("--k", synth.k, "Feature dimension");
  gen->add_option("--a-rate", synth.a_rate, "P(A=1)");
  gen->add_option("--rarity", synth.rarity, "Feature rarity exponent");
  gen->add_option("--flip-amount", synth.flip_amount, "Flip probability where z equals a");
  gen->add_option("--w-sigma", synth.w_sigma, "Variance of the labeling weights");
  gen->add_option("--seed", synth.seed, "Generator seed");
  gen->add_option("--out", synth_out, "Output CSV (stdout if omitted)");

  std::size_t worlds = 100;
  std::uint64_t oracle_seed = 0;
  double tol = 1e-8;
  auto* oracles = app.add_subcommand("check-oracles", "Verify the loss decomposition on random worlds");
  oracles->add_option("--worlds", worlds, "Number of random worlds");
  oracles->add_option("--seed", oracle_seed, "Seed");
  oracles->add_option("--tol", tol, "Absolute tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      bfarl::ExperimentConfig config = bfarl::ExperimentConfig::load(config_path);
      if (seed) config.seed = *seed;
      if (!out_dir.empty()) config.output_dir = out_dir;
      const bfarl::ExperimentResult result = bfarl::run_experiment(config, jobs);
      bfarl::write_outputs(result, config, config.output_dir);
      if (!quiet) print_aggregate(result);
      return result.ok() ? 0 : 2;
    }
    if (*validate) {
      const bfarl::ExperimentConfig config = bfarl::ExperimentConfig::load(config_path);
      std::cout << config.canonical_text();
      std::printf("hash=%016llx\n", static_cast<unsigned long long>(config.hash()));
      return 0;
    }
    if (*gen) {
      const bfarl::SyntheticData data = bfarl::generate(synth);
      if (synth_out.empty()) bfarl::write_dataset_csv(data.data, std::cout);
      else bfarl::save_dataset(data.data, synth_out);
      return 0;
    }
    if (*oracles) {
      const bfarl::OracleSummary s = bfarl::check_decomposition_suite(worlds, oracle_seed, tol);
      std::printf("worlds=%zu failures=%zu max_residual=%.3e\n", s.worlds, s.failures,
                  s.max_residual);
      return s.failures == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
