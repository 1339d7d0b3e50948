#pragma once

#include "ardbscan/types.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <vector>

namespace ardbscan {

/// Point features with optional ground-truth class ids aligned by row.
struct Dataset {
  PointMatrix points;
  std::optional<Labels> labels;

  Index size() const noexcept { return points.rows(); }
  Index dim() const noexcept { return points.cols(); }
  bool has_labels() const noexcept { return labels.has_value(); }

  /// Rows selected by `indices`, labels carried along.
  Dataset subset(std::span<const Index> indices) const;
};

/// Indices of the weakly supervised points.
struct LabeledSubset {
  std::vector<Index> indices;  // sorted ascending
  double proportion = 0.0;
};

/// Header-less CSV, one point per row; with `has_labels` the last column is an
/// integer class id. Throws ParseError naming the offending line.
Dataset load_csv(const std::filesystem::path& path, bool has_labels);
Dataset parse_csv(std::istream& in, bool has_labels);

/// Per-column min-max scaling into [0, 1]; constant columns map to 0.
Dataset normalize(const Dataset& ds);

/// Uniform sample without replacement of round(proportion * n) indices
/// (at least one), reproducible for a given seed.
LabeledSubset sample_labeled_subset(const Dataset& ds, double proportion, std::uint64_t seed);

/// Sequential split; the first n mod num_blocks blocks get one extra point.
std::vector<Dataset> split_blocks(const Dataset& ds, Index num_blocks);

}  // namespace ardbscan
