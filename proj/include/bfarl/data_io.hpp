#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bfarl/dataset.hpp"

namespace bfarl {

// How to turn a raw tabular file into a Dataset.
struct DatasetRecipe {
  std::string name;
  std::filesystem::path source;
  bool whitespace_delimited = false;          // otherwise comma separated
  std::vector<std::string> column_names;      // replaces the header line if set
  std::string label_column;
  std::vector<std::string> positive_values;   // label values mapped to +1
  std::string sensitive_column;
  std::vector<std::string> protected_values;  // mapped to group 0
  std::vector<std::string> categorical;       // one-hot encoded
  std::vector<std::string> numeric;           // z-scored after the split
  std::string missing_marker = "?";
  // Keep only rows whose column value is in the list.
  std::vector<std::pair<std::string, std::vector<std::string>>> filters;

  void validate() const;
};

// Reads a recipe file; relative `source` paths resolve against `data_dir`
// when given, else against the recipe's own directory.
DatasetRecipe load_recipe(const std::filesystem::path& path,
                          const std::filesystem::path& data_dir = {});

// The first line of the file is always consumed as the header. Rows with the
// missing marker in any used column are dropped and counted in provenance.
Dataset load_csv(const DatasetRecipe& recipe);
Dataset load_csv(const DatasetRecipe& recipe, std::istream& in);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

// Seeded shuffle, then the first floor(fraction * N) rows train.
TrainTestSplit split(const Dataset& ds, double train_fraction, std::uint64_t seed);

// Z-scoring of the numeric columns, fitted on one split and applied to others.
struct Standardizer {
  std::vector<std::size_t> columns;
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Dataset& train);
  Dataset apply(const Dataset& ds) const;
};

// Interchange format: header feature_0..feature_{d-1},y,a[,z], then one row
// per sample with reals printed to round-trip exactly.
void write_dataset_csv(const Dataset& ds, std::ostream& out);
Dataset read_dataset_csv(std::istream& in, const std::string& origin = "<input>");
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// RFC 4180 style field splitting (quotes, doubled quotes).
std::vector<std::string> parse_csv_line(const std::string& line, char sep = ',');

}  // namespace bfarl
