#include "bfarl/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "bfarl/keyvalue.hpp"
#include "bfarl/random.hpp"

namespace bfarl {

namespace {

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool contains(const std::vector<std::string>& values, const std::string& v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::string> parse_csv_line(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == sep) {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

void DatasetRecipe::validate() const {
  if (label_column.empty()) throw ConfigError("recipe needs a label column");
  if (sensitive_column.empty()) throw ConfigError("recipe needs a sensitive column");
  if (positive_values.empty()) throw ConfigError("recipe needs positive label values");
  if (protected_values.empty()) throw ConfigError("recipe needs protected group values");
  if (categorical.empty() && numeric.empty()) throw ConfigError("recipe has no feature columns");
  for (const auto& list : {categorical, numeric}) {
    if (contains(list, label_column))
      throw ConfigError("label column '" + label_column + "' is also a feature");
    if (contains(list, sensitive_column))
      throw ConfigError("sensitive column '" + sensitive_column + "' is also a feature");
  }
  std::set<std::string> seen;
  for (const auto& list : {categorical, numeric})
    for (const std::string& c : list)
      if (!seen.insert(c).second) throw ConfigError("feature column '" + c + "' listed twice");
}

DatasetRecipe load_recipe(const std::filesystem::path& path,
                          const std::filesystem::path& data_dir) {
  const KeyValueFile kv = KeyValueFile::load(path.string());
  DatasetRecipe r;
  r.name = kv.get_or("name", path.stem().string());
  const std::filesystem::path source = kv.require("source");
  const std::filesystem::path base = data_dir.empty() ? path.parent_path() : data_dir;
  r.source = source.is_absolute() ? source : base / source;
  const std::string delim = kv.get_or("delimiter", "comma");
  if (delim == "whitespace") r.whitespace_delimited = true;
  else if (delim != "comma") throw ConfigError(path.string() + ": unknown delimiter '" + delim + "'");
  r.column_names = kv.get_list("column_names");
  r.label_column = kv.require("label");
  r.positive_values = kv.get_list("positive");
  r.sensitive_column = kv.require("sensitive");
  r.protected_values = kv.get_list("protected");
  r.categorical = kv.get_list("categorical");
  r.numeric = kv.get_list("numeric");
  r.missing_marker = kv.get_or("missing", "?");
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("filter.", 0) == 0) {
      kv.get(key);
      r.filters.emplace_back(key.substr(7), split_list(value));
    }
  }
  if (const auto unused = kv.unused_keys(); !unused.empty())
    throw ConfigError(path.string() + ": unknown key '" + unused.front() + "'");
  r.validate();
  return r;
}

Dataset load_csv(const DatasetRecipe& recipe) {
  std::ifstream in(recipe.source);
  if (!in) throw IngestionError("cannot open data file " + recipe.source.string());
  return load_csv(recipe, in);
}

Dataset load_csv(const DatasetRecipe& recipe, std::istream& in) {
  recipe.validate();
  auto split_row = [&](const std::string& line) {
    std::vector<std::string> f =
        recipe.whitespace_delimited ? split_whitespace(line) : parse_csv_line(line);
    for (std::string& s : f) s = trim(s);
    return f;
  };

  std::string line;
  if (!std::getline(in, line)) throw IngestionError(recipe.source.string() + ": file is empty");
  std::vector<std::string> columns = split_row(line);
  if (!recipe.column_names.empty()) columns = recipe.column_names;

  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < columns.size(); ++c) index.emplace(columns[c], c);
  auto col = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end())
      throw IngestionError(recipe.source.string() + ": missing column '" + name + "'");
    return it->second;
  };
  const std::size_t label_col = col(recipe.label_column);
  const std::size_t sens_col = col(recipe.sensitive_column);
  std::vector<std::size_t> num_cols, cat_cols;
  for (const auto& c : recipe.numeric) num_cols.push_back(col(c));
  for (const auto& c : recipe.categorical) cat_cols.push_back(col(c));
  std::vector<std::pair<std::size_t, const std::vector<std::string>*>> filters;
  for (const auto& [name, values] : recipe.filters) filters.emplace_back(col(name), &values);

  std::vector<std::size_t> used{label_col, sens_col};
  used.insert(used.end(), num_cols.begin(), num_cols.end());
  used.insert(used.end(), cat_cols.begin(), cat_cols.end());

  std::vector<std::vector<double>> numeric_rows;
  std::vector<std::vector<std::string>> cat_rows;
  std::vector<Label> labels;
  std::vector<Group> groups;
  std::size_t dropped = 0, filtered = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_row(line);
    if (f.size() != columns.size())
      throw IngestionError(recipe.source.string() + ": row " + std::to_string(lineno) +
                           " has " + std::to_string(f.size()) + " fields, expected " +
                           std::to_string(columns.size()));
    bool keep = true;
    for (const auto& [c, values] : filters) keep = keep && contains(*values, f[c]);
    if (!keep) {
      ++filtered;
      continue;
    }
    bool missing = false;
    for (const std::size_t c : used)
      missing = missing || f[c].empty() || f[c] == recipe.missing_marker;
    if (missing) {
      ++dropped;
      continue;
    }
    std::vector<double> nums;
    for (const std::size_t c : num_cols) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f[c].data(), f[c].data() + f[c].size(), v);
      if (ec != std::errc() || ptr != f[c].data() + f[c].size())
        throw IngestionError(recipe.source.string() + ": row " + std::to_string(lineno) +
                             ", column '" + columns[c] + "': cannot parse '" + f[c] +
                             "' as a number");
      nums.push_back(v);
    }
    numeric_rows.push_back(std::move(nums));
    std::vector<std::string> cats;
    for (const std::size_t c : cat_cols) cats.push_back(f[c]);
    cat_rows.push_back(std::move(cats));
    labels.push_back(contains(recipe.positive_values, f[label_col]) ? Label::positive
                                                                    : Label::negative);
    groups.push_back(contains(recipe.protected_values, f[sens_col]) ? 0 : 1);
  }

  // One-hot levels in sorted order so encodings are stable across runs.
  std::vector<std::vector<std::string>> levels(cat_cols.size());
  for (std::size_t j = 0; j < cat_cols.size(); ++j) {
    std::set<std::string> uniq;
    for (const auto& row : cat_rows) uniq.insert(row[j]);
    levels[j].assign(uniq.begin(), uniq.end());
  }
  std::size_t d = num_cols.size();
  for (const auto& l : levels) d += l.size();

  Dataset ds;
  const auto n = static_cast<Eigen::Index>(labels.size());
  ds.features = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < num_cols.size(); ++j) {
    ds.feature_names.push_back(recipe.numeric[j]);
    ds.numeric_columns.push_back(j);
  }
  for (std::size_t j = 0; j < levels.size(); ++j)
    for (const auto& v : levels[j]) ds.feature_names.push_back(recipe.categorical[j] + "=" + v);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    Eigen::Index c = 0;
    for (const double v : numeric_rows[row]) ds.features(i, c++) = v;
    for (std::size_t j = 0; j < levels.size(); ++j) {
      const auto pos = std::lower_bound(levels[j].begin(), levels[j].end(), cat_rows[row][j]);
      ds.features(i, c + (pos - levels[j].begin())) = 1.0;
      c += static_cast<Eigen::Index>(levels[j].size());
    }
  }
  ds.y = std::move(labels);
  ds.a = std::move(groups);
  ds.provenance.source = recipe.source.string();
  ds.provenance.recipe = recipe.name;
  ds.provenance.dropped_rows = dropped;
  const auto counts = ds.group_counts();
  ds.provenance.notes.push_back("rows=" + std::to_string(ds.size()) +
                                " protected=" + std::to_string(counts[0]) +
                                " unprotected=" + std::to_string(counts[1]) +
                                " dropped_missing=" + std::to_string(dropped) +
                                " filtered=" + std::to_string(filtered));
  if (ds.size() == 0) throw IngestionError(recipe.source.string() + ": no usable rows");
  ds.validate();
  return ds;
}

TrainTestSplit split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw DomainError("train fraction must lie in (0,1)");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(ds.size()) + 1e-9));
  TrainTestSplit out;
  out.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  out.train = ds.subset(out.train_rows);
  out.test = ds.subset(out.test_rows);
  out.train.provenance.seeds.push_back(seed);
  out.test.provenance.seeds.push_back(seed);
  return out;
}

Standardizer Standardizer::fit(const Dataset& train) {
  Standardizer s;
  s.columns = train.numeric_columns;
  const double n = static_cast<double>(train.size());
  for (const std::size_t c : s.columns) {
    const auto col = train.features.col(static_cast<Eigen::Index>(c));
    const double mean = n > 0 ? col.mean() : 0.0;
    const double var = n > 0 ? (col.array() - mean).square().sum() / n : 0.0;
    s.mean.push_back(mean);
    s.scale.push_back(var > 0.0 ? std::sqrt(var) : 1.0);
  }
  return s;
}

Dataset Standardizer::apply(const Dataset& ds) const {
  Dataset out = ds;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    auto col = out.features.col(static_cast<Eigen::Index>(columns[j]));
    col = (col.array() - mean[j]) / scale[j];
  }
  return out;
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
  ds.validate();
  for (std::size_t j = 0; j < ds.dim(); ++j) out << "feature_" << j << ',';
  out << "y,a" << (ds.z ? ",z" : "") << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j)
      out << format_real(ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
          << ',';
    out << to_int(ds.y[i]) << ',' << ds.a[i];
    if (ds.z) out << ',' << to_int((*ds.z)[i]);
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw IngestionError(origin + ": file is empty");
  const std::vector<std::string> header = parse_csv_line(line);
  const bool has_z = !header.empty() && trim(header.back()) == "z";
  const std::size_t tail = has_z ? 3 : 2;
  if (header.size() < tail + 1) throw IngestionError(origin + ": header has no feature columns");
  const std::size_t d = header.size() - tail;
  if (trim(header[d]) != "y" || trim(header[d + 1]) != "a")
    throw IngestionError(origin + ": header must end with y,a[,z]");

  std::vector<double> values;
  Dataset ds;
  if (has_z) ds.z.emplace();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = parse_csv_line(line);
    if (f.size() != header.size())
      throw IngestionError(origin + ": row " + std::to_string(lineno) + " has " +
                           std::to_string(f.size()) + " fields, expected " +
                           std::to_string(header.size()));
    auto number = [&](std::size_t c) {
      const std::string t = trim(f[c]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw IngestionError(origin + ": row " + std::to_string(lineno) + ", column " +
                             std::to_string(c) + ": cannot parse '" + t + "'");
      return v;
    };
    for (std::size_t j = 0; j < d; ++j) values.push_back(number(j));
    auto label = [&](std::size_t c) {
      const double v = number(c);
      if (v != 1.0 && v != -1.0)
        throw IngestionError(origin + ": row " + std::to_string(lineno) + ", column " +
                             std::to_string(c) + ": label must be -1 or 1");
      return label_from_int(static_cast<int>(v));
    };
    ds.y.push_back(label(d));
    const double a = number(d + 1);
    if (a != 0.0 && a != 1.0)
      throw IngestionError(origin + ": row " + std::to_string(lineno) + ": group must be 0 or 1");
    ds.a.push_back(static_cast<Group>(a));
    if (has_z) ds.z->push_back(label(d + 2));
  }
  const auto n = static_cast<Eigen::Index>(ds.y.size());
  ds.features.resize(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j)
      ds.features(i, j) = values[static_cast<std::size_t>(i) * d + static_cast<std::size_t>(j)];
  ds.provenance.source = origin;
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  write_dataset_csv(ds, out);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  return read_dataset_csv(in, path.string());
}

}  // namespace bfarl
