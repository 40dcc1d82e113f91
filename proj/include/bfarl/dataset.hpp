#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bfarl/types.hpp"

namespace bfarl {

struct Provenance {
  std::string source;
  std::string recipe;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> notes;
  std::size_t dropped_rows = 0;       // rows removed for missing values
  std::size_t selection_removed = 0;  // rows removed by selection bias
};

// Rows of (x, y, a) with optional latent clean labels z.
struct Dataset {
  Eigen::MatrixXd features;  // N x d, row major in meaning: one row per sample
  std::vector<Label> y;
  std::vector<Group> a;
  std::optional<std::vector<Label>> z;
  std::vector<std::string> feature_names;    // empty or size d
  std::vector<std::size_t> numeric_columns;  // columns eligible for z-scoring
  Provenance provenance;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  // Throws ShapeError / DomainError when the invariants do not hold.
  void validate() const;

  Dataset subset(std::span<const std::size_t> rows) const;

  PerGroup<std::size_t> group_counts() const;

  // z when present, otherwise y.
  const std::vector<Label>& clean_labels() const { return z ? *z : y; }
};

// Copy of `ds` with the sensitive attribute appended as a trailing feature.
Dataset with_sensitive_feature(const Dataset& ds);

}  // namespace bfarl
