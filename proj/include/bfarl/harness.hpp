#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bfarl/bias.hpp"
#include "bfarl/keyvalue.hpp"
#include "bfarl/losses.hpp"
#include "bfarl/meta_opt.hpp"
#include "bfarl/metrics.hpp"
#include "bfarl/synthetic.hpp"

namespace bfarl {

enum class ExperimentKind {
  label_bias_sweep,      // grid = average label bias, sigma from bias.sigma
  selection_bias_sweep,  // grid = sigma, rates from bias.theta
  clean_eval,            // no injection
  intensity_study,       // grid ignored; beta swept along a ray
  single_run,            // bias spec as given, one cell
};

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

enum class Method { clean, biased, bfarl };
inline constexpr std::array<Method, 3> kMethods{Method::clean, Method::biased,
                                                Method::bfarl};
std::string to_string(Method method);

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::single_run;
  std::optional<std::filesystem::path> recipe;  // unset: synthetic data
  std::filesystem::path data_dir;
  SyntheticConfig synthetic;
  bool fixed_synthetic = false;  // one dataset for every repetition
  std::vector<double> grid;
  BiasSpec bias;
  TrainConfig train;
  MetaParams init_meta;
  bool include_sensitive = true;  // feed A to the classifier as a feature
  std::size_t repetitions = 10;
  std::uint64_t seed = 0;
  double train_fraction = 0.9;
  std::vector<double> intensity_norms;
  std::array<double, 2> intensity_direction{1.0, 1.0};
  std::filesystem::path output_dir = "out";
  bool write_traces = false;

  static ExperimentConfig from_keyvalues(const KeyValueFile& kv);
  static ExperimentConfig load(const std::filesystem::path& path);

  void validate() const;

  // Normalized text form; hashing it identifies the configuration.
  std::string canonical_text() const;
  std::uint64_t hash() const;

  // Grid values actually swept (a single placeholder for grid-less kinds).
  std::vector<double> cells() const;
};

// Average label bias b realized as theta0+ = theta1- = 4b/3 and
// theta0- = theta1+ = 2b/3, so the four-rate mean is b with theta0+ > theta0-
// and theta1- > theta1+.
BiasSpec average_bias_spec(double average, double sigma);

// Bias applied in grid cell `value` for the configured experiment kind.
std::optional<BiasSpec> cell_bias(const ExperimentConfig& config, double value);

struct RunRecord {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::size_t cell = 0;
  double grid_value = 0.0;
  std::size_t split_id = 0;
  std::array<MetricsReport, 3> metrics{};  // indexed by Method
  MetaParams final_meta;
  std::size_t selection_removed = 0;
  double observed_flip_rate = 0.0;
  bool test_labels_clean = true;
};

struct CellFailure {
  std::size_t cell = 0;
  std::size_t split_id = 0;
  double grid_value = 0.0;
  std::string error;
};

struct AggregateRow {
  std::size_t cell = 0;
  double grid_value = 0.0;
  Method method = Method::clean;
  std::size_t runs = 0;
  std::array<std::size_t, 4> count{};  // runs where the metric is defined
  std::array<double, 4> mean{};        // f1, deo, p%, risk gap
  std::array<double, 4> stddev{};      // N-1 denominator, 0 for a single run
};

inline constexpr std::array<const char*, 4> kMetricNames{"f1", "deo", "p_percent",
                                                         "risk_gap"};

std::array<double, 4> metric_values(const MetricsReport& report);

struct IntensityPoint {
  double norm = 0.0;
  PerGroup<double> beta{};
  std::size_t runs = 0;
  std::array<std::size_t, 4> count{};
  std::array<double, 4> mean{};
  std::array<double, 4> stddev{};
};

struct TracedRun {
  std::size_t cell = 0;
  std::size_t split_id = 0;
  MetaTrace trace;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<AggregateRow> aggregate;
  std::vector<IntensityPoint> curve;
  std::vector<CellFailure> failures;
  std::vector<TracedRun> traces;

  bool ok() const { return failures.empty(); }
};

// Everything one repetition of one cell needs, before training.
struct PreparedRun {
  Dataset clean_train;
  Dataset biased_train;
  Dataset test;
  std::uint64_t seed = 0;
};

PreparedRun prepare_run(const ExperimentConfig& config, const Dataset* base,
                        double grid_value, std::size_t cell, std::size_t rep);

std::uint64_t run_seed(std::uint64_t base, std::size_t cell, std::size_t rep);

// Trains clean/biased/B-FARL for one (cell, repetition).
RunRecord execute_run(const ExperimentConfig& config, const Dataset* base,
                      std::size_t cell, std::size_t rep, MetaTrace* trace = nullptr);

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& runs);

// Grid x repetition fan-out; runs up to `jobs` workers.
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t jobs = 1);

// Fixed alpha = init_meta.alpha, beta = norm * unit(direction) for each norm.
std::vector<IntensityPoint> intensity_study(const ExperimentConfig& config,
                                            std::size_t jobs = 1);

// aggregate.csv, long.csv, runs.jsonl, intensity.csv, traces.csv and
// failures.json (only when something failed).
void write_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& dir);

void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& out);
void write_long_csv(const std::vector<AggregateRow>& rows, std::ostream& out);
void write_runs_jsonl(const std::vector<RunRecord>& runs, std::ostream& out);
void write_intensity_csv(const std::vector<IntensityPoint>& curve, std::ostream& out);

}  // namespace bfarl
