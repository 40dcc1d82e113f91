#include "bfarl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "bfarl/data_io.hpp"
#include "bfarl/error.hpp"
#include "bfarl/random.hpp"

namespace bfarl {

namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_reals(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + real(values[i]);
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

PerGroup<double> pair_of(const KeyValueFile& kv, const std::string& key,
                         PerGroup<double> fallback) {
  if (!kv.has(key)) return fallback;
  const auto v = kv.get_doubles(key);
  if (v.size() != 2) throw ConfigError(kv.origin() + ": " + key + " needs two values");
  return {v[0], v[1]};
}

Activation parse_activation(const std::string& text) {
  if (text == "relu") return Activation::relu;
  if (text == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + text + "'");
}

const char* activation_name(Activation a) { return a == Activation::relu ? "relu" : "sigmoid"; }

// Mean and N-1 standard deviation of the finite entries; NaN when none are.
std::pair<double, double> mean_std(std::vector<double> xs) {
  std::erase_if(xs, [](double x) { return !std::isfinite(x); });
  if (xs.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (const double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

// Runs task(i) for i in [0, count) on up to `jobs` threads.
template <typename Task>
void parallel_for(std::size_t count, std::size_t jobs, Task task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  for (auto& t : workers) t.join();
}

std::optional<Dataset> load_base(const ExperimentConfig& config) {
  if (!config.recipe) return std::nullopt;
  return load_csv(load_recipe(*config.recipe, config.data_dir));
}

void relabel_clean(Dataset& ds) {
  if (!ds.z) ds.z = ds.y;
  ds.y = *ds.z;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::label_bias_sweep: return "label_bias_sweep";
    case ExperimentKind::selection_bias_sweep: return "selection_bias_sweep";
    case ExperimentKind::clean_eval: return "clean_eval";
    case ExperimentKind::intensity_study: return "intensity_study";
    case ExperimentKind::single_run: return "single_run";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  for (const auto k : {ExperimentKind::label_bias_sweep, ExperimentKind::selection_bias_sweep,
                       ExperimentKind::clean_eval, ExperimentKind::intensity_study,
                       ExperimentKind::single_run})
    if (to_string(k) == text) return k;
  throw ConfigError("unknown experiment kind '" + text + "'");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::clean: return "clean";
    case Method::biased: return "biased";
    case Method::bfarl: return "bfarl";
  }
  return "unknown";
}

ExperimentConfig ExperimentConfig::from_keyvalues(const KeyValueFile& kv) {
  const auto version = kv.get_int("schema_version", -1);
  if (version != kConfigSchemaVersion)
    throw ConfigError(kv.origin() + ": schema_version must be " +
                      std::to_string(kConfigSchemaVersion));

  ExperimentConfig c;
  c.kind = parse_experiment_kind(kv.require("kind"));
  const std::filesystem::path origin_dir = std::filesystem::path(kv.origin()).parent_path();
  if (const auto recipe = kv.get("recipe")) {
    std::filesystem::path p = *recipe;
    c.recipe = p.is_absolute() ? p : origin_dir / p;
  }
  if (const auto dir = kv.get("data_dir")) {
    std::filesystem::path p = *dir;
    c.data_dir = p.is_absolute() ? p : origin_dir / p;
  }

  SyntheticConfig& s = c.synthetic;
  s.n = kv.get_uint("synthetic.n", s.n);
  s.k = kv.get_uint("synthetic.k", s.k);
  s.a_rate = kv.get_double("synthetic.a_rate", s.a_rate);
  s.rarity = kv.get_double("synthetic.rarity", s.rarity);
  s.flip_amount = kv.get_double("synthetic.flip_amount", s.flip_amount);
  s.w_sigma = kv.get_double("synthetic.w_sigma", s.w_sigma);
  if (kv.has("synthetic.seed")) {
    c.fixed_synthetic = true;
    s.seed = kv.get_uint("synthetic.seed", 0);
  }

  c.grid = kv.get_doubles("grid");
  const double sigma = kv.get_double("bias.sigma", 1.0);
  const double r = kv.get_double("bias.r", 0.5);
  if (kv.has("bias.theta")) {
    const auto t = kv.get_doubles("bias.theta");
    if (t.size() != 4)
      throw ConfigError(kv.origin() + ": bias.theta needs four rates (0+, 0-, 1+, 1-)");
    c.bias = BiasSpec::from_rates(t[0], t[1], t[2], t[3], sigma, r);
  } else {
    c.bias.sigma = sigma;
    c.bias.r = r;
  }
  c.bias.selection_group = static_cast<Group>(kv.get_int("bias.selection_group", 0));

  TrainConfig& t = c.train;
  t.eta = kv.get_double("train.eta", t.eta);
  t.eta_prime = kv.get_double("train.eta_prime", t.eta_prime);
  t.gamma = kv.get_double("train.gamma", t.gamma);
  t.batch_size = kv.get_uint("train.batch_size", t.batch_size);
  t.steps = kv.get_uint("train.steps", t.steps);
  if (kv.has("train.hidden")) {
    t.hidden_sizes.clear();
    for (const std::string& h : kv.get_list("train.hidden")) {
      const double v = parse_double(h, "train.hidden");
      if (v < 1 || v != std::floor(v)) throw ConfigError("train.hidden sizes must be positive integers");
      t.hidden_sizes.push_back(static_cast<std::size_t>(v));
    }
  }
  t.activation = parse_activation(kv.get_or("train.activation", "relu"));

  c.init_meta.alpha = pair_of(kv, "meta.alpha", c.init_meta.alpha);
  c.init_meta.beta = pair_of(kv, "meta.beta", c.init_meta.beta);
  c.include_sensitive = kv.get_bool("include_sensitive", c.include_sensitive);
  c.repetitions = kv.get_uint("repetitions", c.repetitions);
  c.seed = kv.get_uint("seed", c.seed);
  c.train_fraction = kv.get_double("train_fraction", c.train_fraction);
  c.intensity_norms = kv.get_doubles("intensity.norms");
  c.intensity_direction = pair_of(kv, "intensity.direction", c.intensity_direction);
  c.output_dir = kv.get_or("output_dir", c.output_dir.string());
  c.write_traces = kv.get_bool("output.traces", c.write_traces);

  if (const auto unused = kv.unused_keys(); !unused.empty())
    throw ConfigError(kv.origin() + ": unknown key '" + unused.front() + "'");
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_keyvalues(KeyValueFile::load(path.string()));
}

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0,1)");
  if (!recipe) synthetic.validate();
  train.validate();
  init_meta.validate();
  bias.validate();
  switch (kind) {
    case ExperimentKind::label_bias_sweep:
      if (grid.empty()) throw ConfigError("label_bias_sweep needs a nonempty grid");
      for (const double b : grid)
        if (!(b >= 0.0 && b <= 0.75)) throw ConfigError("average label bias must lie in [0, 0.75]");
      break;
    case ExperimentKind::selection_bias_sweep:
      if (grid.empty()) throw ConfigError("selection_bias_sweep needs a nonempty grid");
      for (const double s : grid)
        if (!(s >= 1.0)) throw ConfigError("selection grid values are sigma and must be >= 1");
      break;
    case ExperimentKind::intensity_study: {
      if (intensity_norms.empty()) throw ConfigError("intensity_study needs intensity.norms");
      for (const double n : intensity_norms)
        if (!(n >= 0.0) || !std::isfinite(n)) throw ConfigError("intensity norms must be >= 0");
      const double len = std::hypot(intensity_direction[0], intensity_direction[1]);
      if (!(len > 0.0) || !std::isfinite(len))
        throw ConfigError("intensity.direction must be a nonzero vector");
      break;
    }
    case ExperimentKind::clean_eval:
    case ExperimentKind::single_run:
      break;
  }
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream o;
  o << "schema_version=" << kConfigSchemaVersion << '\n'
    << "kind=" << to_string(kind) << '\n';
  if (recipe) o << "recipe=" << recipe->filename().string() << '\n';
  else
    o << "synthetic=" << synthetic.n << ',' << synthetic.k << ',' << real(synthetic.a_rate) << ','
      << real(synthetic.rarity) << ',' << real(synthetic.flip_amount) << ','
      << real(synthetic.w_sigma) << ',' << (fixed_synthetic ? std::to_string(synthetic.seed) : "per_run")
      << '\n';
  o << "grid=" << join_reals(grid) << '\n'
    << "bias.theta=" << real(bias.theta_plus[0]) << ',' << real(bias.theta_minus[0]) << ','
    << real(bias.theta_plus[1]) << ',' << real(bias.theta_minus[1]) << '\n'
    << "bias.sigma=" << real(bias.sigma) << '\n'
    << "bias.r=" << real(bias.r) << '\n'
    << "bias.selection_group=" << bias.selection_group << '\n'
    << "train=" << real(train.eta) << ',' << real(train.eta_prime) << ',' << real(train.gamma)
    << ',' << train.batch_size << ',' << train.steps << ',' << activation_name(train.activation)
    << '\n'
    << "train.hidden=";
  for (std::size_t i = 0; i < train.hidden_sizes.size(); ++i)
    o << (i ? "," : "") << train.hidden_sizes[i];
  o << '\n'
    << "meta=" << join_reals({init_meta.alpha[0], init_meta.alpha[1], init_meta.beta[0],
                              init_meta.beta[1]})
    << '\n'
    << "include_sensitive=" << (include_sensitive ? 1 : 0) << '\n'
    << "repetitions=" << repetitions << '\n'
    << "seed=" << seed << '\n'
    << "train_fraction=" << real(train_fraction) << '\n'
    << "intensity.norms=" << join_reals(intensity_norms) << '\n'
    << "intensity.direction=" << join_reals({intensity_direction[0], intensity_direction[1]})
    << '\n';
  return o.str();
}

std::uint64_t ExperimentConfig::hash() const {
  // FNV-1a.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : canonical_text()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> ExperimentConfig::cells() const {
  switch (kind) {
    case ExperimentKind::label_bias_sweep:
    case ExperimentKind::selection_bias_sweep:
      return grid;
    case ExperimentKind::intensity_study:
      return intensity_norms;
    case ExperimentKind::clean_eval:
    case ExperimentKind::single_run:
      break;
  }
  return {0.0};
}

BiasSpec average_bias_spec(double average, double sigma) {
  const double hi = 2.0 * average * (2.0 / 3.0);
  const double lo = 2.0 * average * (1.0 / 3.0);
  return BiasSpec::from_rates(hi, lo, lo, hi, sigma);
}

std::optional<BiasSpec> cell_bias(const ExperimentConfig& config, double value) {
  switch (config.kind) {
    case ExperimentKind::label_bias_sweep: {
      BiasSpec spec = average_bias_spec(value, config.bias.sigma);
      spec.r = config.bias.r;
      spec.selection_group = config.bias.selection_group;
      return spec;
    }
    case ExperimentKind::selection_bias_sweep: {
      BiasSpec spec = config.bias;
      spec.sigma = value;
      return spec;
    }
    case ExperimentKind::clean_eval:
      return std::nullopt;
    case ExperimentKind::intensity_study:
    case ExperimentKind::single_run:
      return config.bias;
  }
  return std::nullopt;
}

std::array<double, 4> metric_values(const MetricsReport& report) {
  return {report.f1_weighted_macro, report.deo, report.p_percent, report.subgroup_risk_gap};
}

std::uint64_t run_seed(std::uint64_t base, std::size_t cell, std::size_t rep) {
  return derive_seed(base, cell, rep);
}

PreparedRun prepare_run(const ExperimentConfig& config, const Dataset* base, double grid_value,
                        std::size_t cell, std::size_t rep) {
  PreparedRun out;
  out.seed = run_seed(config.seed, cell, rep);

  Dataset source;
  if (base) {
    source = *base;
  } else {
    SyntheticConfig sc = config.synthetic;
    if (!config.fixed_synthetic) sc.seed = derive_seed(out.seed, seed_stream::synthetic);
    source = generate(sc).data;
  }

  TrainTestSplit parts =
      split(source, config.train_fraction, derive_seed(out.seed, seed_stream::split));
  const Standardizer scaler = Standardizer::fit(parts.train);
  Dataset train = scaler.apply(parts.train);
  Dataset test = scaler.apply(parts.test);

  out.clean_train = train;
  relabel_clean(out.clean_train);
  relabel_clean(test);

  const std::optional<BiasSpec> spec = cell_bias(config, grid_value);
  if (spec) {
    Dataset biased = out.clean_train;
    if (spec->sigma > 1.0)
      biased = inject_selection_bias(biased, spec->sigma,
                                     derive_seed(out.seed, seed_stream::selection),
                                     spec->selection_group);
    out.biased_train =
        inject_label_bias(biased, *spec, derive_seed(out.seed, seed_stream::label_flip));
    out.biased_train.provenance.selection_removed = biased.provenance.selection_removed;
  } else {
    out.biased_train = train;
    if (!out.biased_train.z) out.biased_train.z = out.biased_train.y;
  }

  if (config.include_sensitive) {
    out.clean_train = with_sensitive_feature(out.clean_train);
    out.biased_train = with_sensitive_feature(out.biased_train);
    test = with_sensitive_feature(test);
  }
  out.test = std::move(test);
  return out;
}

RunRecord execute_run(const ExperimentConfig& config, const Dataset* base, std::size_t cell,
                      std::size_t rep, MetaTrace* trace) {
  const std::vector<double> values = config.cells();
  const double grid_value = values.at(cell);
  const PreparedRun prep = prepare_run(config, base, grid_value, cell, rep);

  TrainConfig tc = config.train;
  tc.seed = derive_seed(prep.seed, seed_stream::train);

  RunRecord rec;
  rec.config_hash = config.hash();
  rec.seed = prep.seed;
  rec.cell = cell;
  rec.grid_value = grid_value;
  rec.split_id = rep;

  const TrainResult clean = train_fixed_meta(prep.clean_train, tc, MetaParams{});
  const TrainResult biased = train_fixed_meta(prep.biased_train, tc, MetaParams{});
  TrainResult fair = train(prep.biased_train, tc, config.init_meta);

  rec.metrics[static_cast<std::size_t>(Method::clean)] =
      evaluate(clean.params, prep.test, prep.seed, rep, UndefinedDeo::record_nan);
  rec.metrics[static_cast<std::size_t>(Method::biased)] =
      evaluate(biased.params, prep.test, prep.seed, rep, UndefinedDeo::record_nan);
  rec.metrics[static_cast<std::size_t>(Method::bfarl)] =
      evaluate(fair.params, prep.test, prep.seed, rep, UndefinedDeo::record_nan);
  rec.final_meta = fair.meta;
  rec.selection_removed = prep.biased_train.provenance.selection_removed;

  std::size_t flips = 0;
  const auto& z = prep.biased_train.clean_labels();
  for (std::size_t i = 0; i < prep.biased_train.size(); ++i) flips += prep.biased_train.y[i] != z[i];
  rec.observed_flip_rate =
      prep.biased_train.size() ? static_cast<double>(flips) / static_cast<double>(prep.biased_train.size())
                               : 0.0;
  rec.test_labels_clean = prep.test.z.has_value() && prep.test.y == *prep.test.z;
  if (trace) *trace = std::move(fair.trace);
  return rec;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& runs) {
  std::vector<std::size_t> cells;
  for (const RunRecord& r : runs)
    if (std::find(cells.begin(), cells.end(), r.cell) == cells.end()) cells.push_back(r.cell);
  std::sort(cells.begin(), cells.end());

  std::vector<AggregateRow> rows;
  for (const std::size_t cell : cells) {
    for (const Method m : kMethods) {
      AggregateRow row;
      row.cell = cell;
      row.method = m;
      std::array<std::vector<double>, 4> samples;
      for (const RunRecord& r : runs) {
        if (r.cell != cell) continue;
        row.grid_value = r.grid_value;
        ++row.runs;
        const auto v = metric_values(r.metrics[static_cast<std::size_t>(m)]);
        for (std::size_t k = 0; k < 4; ++k) samples[k].push_back(v[k]);
      }
      for (std::size_t k = 0; k < 4; ++k) {
        row.count[k] = static_cast<std::size_t>(
            std::count_if(samples[k].begin(), samples[k].end(), [](double x) { return std::isfinite(x); }));
        std::tie(row.mean[k], row.stddev[k]) = mean_std(samples[k]);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t jobs) {
  config.validate();
  ExperimentResult result;
  if (config.kind == ExperimentKind::intensity_study) {
    result.curve = intensity_study(config, jobs);
    return result;
  }
  const std::optional<Dataset> base = load_base(config);
  const std::vector<double> values = config.cells();
  const std::size_t reps = config.repetitions;
  const std::size_t count = values.size() * reps;

  std::vector<std::optional<RunRecord>> records(count);
  std::vector<std::string> errors(count);
  std::vector<MetaTrace> traces(config.write_traces ? count : 0);
  parallel_for(count, jobs, [&](std::size_t i) {
    const std::size_t cell = i / reps, rep = i % reps;
    try {
      records[i] = execute_run(config, base ? &*base : nullptr, cell, rep,
                               config.write_traces ? &traces[i] : nullptr);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  for (std::size_t cell = 0; cell < values.size(); ++cell) {
    bool failed = false;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const std::size_t i = cell * reps + rep;
      if (!records[i]) {
        failed = true;
        result.failures.push_back({cell, rep, values[cell], errors[i]});
      }
    }
    if (failed) continue;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const std::size_t i = cell * reps + rep;
      result.runs.push_back(*records[i]);
      if (config.write_traces) result.traces.push_back({cell, rep, std::move(traces[i])});
    }
  }
  result.aggregate = aggregate(result.runs);
  return result;
}

std::vector<IntensityPoint> intensity_study(const ExperimentConfig& config, std::size_t jobs) {
  if (config.kind != ExperimentKind::intensity_study)
    throw ConfigError("intensity_study requires kind = intensity_study");
  config.validate();
  const std::optional<Dataset> base = load_base(config);
  const std::size_t reps = config.repetitions;
  const std::size_t points = config.intensity_norms.size();
  const double len = std::hypot(config.intensity_direction[0], config.intensity_direction[1]);
  const PerGroup<double> unit{config.intensity_direction[0] / len,
                              config.intensity_direction[1] / len};

  // Every point shares the data, split and initialization of its repetition.
  std::vector<std::optional<std::array<double, 4>>> values(points * reps);
  std::vector<std::string> errors(points * reps);
  parallel_for(points * reps, jobs, [&](std::size_t i) {
    const std::size_t p = i / reps, rep = i % reps;
    try {
      const PreparedRun prep = prepare_run(config, base ? &*base : nullptr, 0.0, 0, rep);
      TrainConfig tc = config.train;
      tc.seed = derive_seed(prep.seed, seed_stream::train);
      MetaParams meta;
      meta.alpha = config.init_meta.alpha;
      const double norm = config.intensity_norms[p];
      meta.beta = {norm * unit[0], norm * unit[1]};
      const TrainResult fit = train_fixed_meta(prep.biased_train, tc, meta);
      values[i] = metric_values(evaluate(fit.params, prep.test, prep.seed, rep, UndefinedDeo::record_nan));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::vector<IntensityPoint> curve;
  for (std::size_t p = 0; p < points; ++p) {
    IntensityPoint pt;
    pt.norm = config.intensity_norms[p];
    pt.beta = {pt.norm * unit[0], pt.norm * unit[1]};
    std::array<std::vector<double>, 4> samples;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const std::size_t i = p * reps + rep;
      if (!values[i])
        throw Error("intensity point ||beta||=" + real(pt.norm) + " repetition " +
                    std::to_string(rep) + " failed: " + errors[i]);
      for (std::size_t k = 0; k < 4; ++k) samples[k].push_back((*values[i])[k]);
    }
    pt.runs = reps;
    for (std::size_t k = 0; k < 4; ++k) {
      pt.count[k] = static_cast<std::size_t>(
          std::count_if(samples[k].begin(), samples[k].end(), [](double x) { return std::isfinite(x); }));
      std::tie(pt.mean[k], pt.stddev[k]) = mean_std(samples[k]);
    }
    curve.push_back(pt);
  }
  return curve;
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& out) {
  out << "cell,grid_value,method,runs";
  for (const char* name : kMetricNames)
    out << ',' << name << "_n," << name << "_mean," << name << "_std";
  out << '\n';
  for (const AggregateRow& r : rows) {
    out << r.cell << ',' << real(r.grid_value) << ',' << to_string(r.method) << ',' << r.runs;
    for (std::size_t k = 0; k < 4; ++k)
      out << ',' << r.count[k] << ',' << real(r.mean[k]) << ',' << real(r.stddev[k]);
    out << '\n';
  }
}

void write_long_csv(const std::vector<AggregateRow>& rows, std::ostream& out) {
  out << "grid_value,method,metric,n,mean,std\n";
  for (const AggregateRow& r : rows)
    for (std::size_t k = 0; k < 4; ++k)
      out << real(r.grid_value) << ',' << to_string(r.method) << ',' << kMetricNames[k] << ','
          << r.count[k] << ',' << real(r.mean[k]) << ',' << real(r.stddev[k]) << '\n';
}

void write_runs_jsonl(const std::vector<RunRecord>& runs, std::ostream& out) {
  for (const RunRecord& r : runs) {
    nlohmann::ordered_json j;
    j["config_hash"] = hex64(r.config_hash);
    j["seed"] = r.seed;
    j["cell"] = r.cell;
    j["grid_value"] = r.grid_value;
    j["split_id"] = r.split_id;
    for (const Method m : kMethods) {
      const MetricsReport& rep = r.metrics[static_cast<std::size_t>(m)];
      nlohmann::ordered_json mj;
      const auto v = metric_values(rep);
      for (std::size_t k = 0; k < 4; ++k) mj[kMetricNames[k]] = v[k];
      mj["n_test"] = rep.n_test;
      j["metrics"][to_string(m)] = mj;
    }
    j["final_alpha"] = {r.final_meta.alpha[0], r.final_meta.alpha[1]};
    j["final_beta"] = {r.final_meta.beta[0], r.final_meta.beta[1]};
    j["beta_norm"] = r.final_meta.beta_norm();
    j["selection_removed"] = r.selection_removed;
    j["observed_flip_rate"] = r.observed_flip_rate;
    j["test_labels_clean"] = r.test_labels_clean;
    out << j.dump() << '\n';
  }
}

void write_intensity_csv(const std::vector<IntensityPoint>& curve, std::ostream& out) {
  out << "norm,beta0,beta1,runs";
  for (const char* name : kMetricNames)
    out << ',' << name << "_n," << name << "_mean," << name << "_std";
  out << '\n';
  for (const IntensityPoint& p : curve) {
    out << real(p.norm) << ',' << real(p.beta[0]) << ',' << real(p.beta[1]) << ',' << p.runs;
    for (std::size_t k = 0; k < 4; ++k)
      out << ',' << p.count[k] << ',' << real(p.mean[k]) << ',' << real(p.stddev[k]);
    out << '\n';
  }
}

void write_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name).string());
    return f;
  };

  {
    nlohmann::ordered_json manifest;
    manifest["schema_version"] = kConfigSchemaVersion;
    manifest["config_hash"] = hex64(config.hash());
    manifest["kind"] = to_string(config.kind);
    manifest["canonical_config"] = config.canonical_text();
    if (config.kind == ExperimentKind::label_bias_sweep)
      manifest["conventions"].push_back(
          "average label bias b realized as theta0+ = theta1- = 4b/3, theta0- = theta1+ = 2b/3");
    manifest["conventions"].push_back("std uses the N-1 denominator");
    manifest["conventions"].push_back("metrics scored against clean test labels");
    manifest["conventions"].push_back(
        "deo is null for runs whose test split has a group without positive labels");
    auto f = open("manifest.json");
    f << manifest.dump(2) << '\n';
  }

  if (config.kind == ExperimentKind::intensity_study) {
    auto f = open("intensity.csv");
    write_intensity_csv(result.curve, f);
  } else {
    auto agg = open("aggregate.csv");
    write_aggregate_csv(result.aggregate, agg);
    auto lng = open("long.csv");
    write_long_csv(result.aggregate, lng);
    auto runs = open("runs.jsonl");
    write_runs_jsonl(result.runs, runs);
  }

  if (config.write_traces) {
    auto f = open("traces.csv");
    f << "cell,split_id,step,alpha0,alpha1,beta0,beta1,inner_loss,meta_loss,actual_loss\n";
    for (const TracedRun& t : result.traces)
      for (const MetaTraceRecord& r : t.trace)
        f << t.cell << ',' << t.split_id << ',' << r.step << ',' << real(r.alpha[0]) << ','
          << real(r.alpha[1]) << ',' << real(r.beta[0]) << ',' << real(r.beta[1]) << ','
          << real(r.inner_loss) << ',' << real(r.meta_loss) << ',' << real(r.actual_loss) << '\n';
  }

  const std::filesystem::path failures = dir / "failures.json";
  if (result.failures.empty()) {
    std::filesystem::remove(failures);
  } else {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const CellFailure& f : result.failures)
      j.push_back({{"cell", f.cell},
                   {"grid_value", f.grid_value},
                   {"split_id", f.split_id},
                   {"error", f.error}});
    auto f = open("failures.json");
    f << j.dump(2) << '\n';
  }
}

}  // namespace bfarl
