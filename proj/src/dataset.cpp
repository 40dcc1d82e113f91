#include "bfarl/dataset.hpp"

#include <string>

namespace bfarl {

void Dataset::validate() const {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (features.rows() != n)
    throw ShapeError("dataset has " + std::to_string(features.rows()) +
                     " feature rows but " + std::to_string(y.size()) + " labels");
  if (a.size() != y.size())
    throw ShapeError("dataset group column length " + std::to_string(a.size()) +
                     " != label count " + std::to_string(y.size()));
  if (z && z->size() != y.size())
    throw ShapeError("clean label column length differs from observed labels");
  if (features.cols() < 1) throw ShapeError("dataset needs at least one feature");
  if (!feature_names.empty() && feature_names.size() != dim())
    throw ShapeError("feature name count does not match feature dimension");
  for (const Group g : a) check_group(g);
  for (const std::size_t c : numeric_columns)
    if (c >= dim()) throw ShapeError("numeric column index out of range");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.y.reserve(rows.size());
  out.a.reserve(rows.size());
  if (z) out.z.emplace().reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= size()) throw ShapeError("subset row index out of range");
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(r));
    out.y.push_back(y[r]);
    out.a.push_back(a[r]);
    if (z) out.z->push_back((*z)[r]);
  }
  out.feature_names = feature_names;
  out.numeric_columns = numeric_columns;
  out.provenance = provenance;
  return out;
}

PerGroup<std::size_t> Dataset::group_counts() const {
  PerGroup<std::size_t> counts{0, 0};
  for (const Group g : a) ++counts[static_cast<std::size_t>(g)];
  return counts;
}

Dataset with_sensitive_feature(const Dataset& ds) {
  Dataset out = ds;
  const Eigen::Index d = ds.features.cols();
  out.features.conservativeResize(Eigen::NoChange, d + 1);
  for (std::size_t i = 0; i < ds.size(); ++i)
    out.features(static_cast<Eigen::Index>(i), d) = static_cast<double>(ds.a[i]);
  if (!out.feature_names.empty()) out.feature_names.push_back("sensitive");
  return out;
}

}  // namespace bfarl
