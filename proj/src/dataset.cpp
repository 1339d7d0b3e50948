#include "ardbscan/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

namespace ardbscan {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw ParseError(line_no, "non-numeric feature '" + std::string(field) + "'");
  }
  return value;
}

int parse_label(std::string_view field, std::size_t line_no) {
  // Accept "3" and "3.0" style labels; anything fractional is rejected.
  const double value = [&] {
    try {
      return parse_double(field, line_no);
    } catch (const ParseError&) {
      throw ParseError(line_no, "non-integer label '" + std::string(field) + "'");
    }
  }();
  if (value != std::floor(value)) {
    throw ParseError(line_no, "non-integer label '" + std::string(field) + "'");
  }
  return static_cast<int>(value);
}

}  // namespace

Dataset Dataset::subset(std::span<const Index> indices) const {
  Dataset out;
  out.points.resize(static_cast<Index>(indices.size()), dim());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.points.row(static_cast<Index>(r)) = points.row(indices[r]);
  }
  if (labels) {
    Labels sub;
    sub.reserve(indices.size());
    for (Index i : indices) sub.push_back((*labels)[static_cast<std::size_t>(i)]);
    out.labels = std::move(sub);
  }
  return out;
}

Dataset parse_csv(std::istream& in, bool has_labels) {
  std::vector<double> values;
  Labels labels;
  Index width = -1;
  Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const Index features = static_cast<Index>(fields.size()) - (has_labels ? 1 : 0);
    if (features < 1) throw ParseError(line_no, "row has no feature columns");
    if (width < 0) {
      width = features;
    } else if (features != width) {
      throw ParseError(line_no, "ragged row: expected " + std::to_string(width) +
                                    " features, found " + std::to_string(features));
    }
    for (Index c = 0; c < features; ++c) {
      values.push_back(parse_double(fields[static_cast<std::size_t>(c)], line_no));
    }
    if (has_labels) labels.push_back(parse_label(fields.back(), line_no));
    ++rows;
  }
  if (rows == 0) throw DataError("empty dataset");

  Dataset ds;
  ds.points = Eigen::Map<const PointMatrix>(values.data(), rows, width);
  if (has_labels) ds.labels = std::move(labels);
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, bool has_labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_csv(in, has_labels);
}

Dataset normalize(const Dataset& ds) {
  Dataset out = ds;
  if (ds.size() == 0) return out;
  for (Index c = 0; c < ds.dim(); ++c) {
    auto col = out.points.col(c);
    const double lo = col.minCoeff();
    const double span = col.maxCoeff() - lo;
    if (span > 0.0) {
      col = ((col.array() - lo) / span).matrix();
      // Guard against 1 + ulp after division.
      col = col.cwiseMax(0.0).cwiseMin(1.0);
    } else {
      col.setZero();
    }
  }
  return out;
}

LabeledSubset sample_labeled_subset(const Dataset& ds, double proportion, std::uint64_t seed) {
  if (!ds.has_labels()) throw DataError("weak supervision requires labels");
  if (!(proportion > 0.0 && proportion <= 1.0)) {
    throw ConfigError("label proportion must lie in (0, 1]");
  }
  const Index n = ds.size();
  const auto count = std::clamp<Index>(
      static_cast<Index>(std::llround(proportion * static_cast<double>(n))), n > 0 ? 1 : 0, n);

  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `count` slots hold the sample.
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
  }
  LabeledSubset subset;
  subset.indices.assign(all.begin(), all.begin() + count);
  std::sort(subset.indices.begin(), subset.indices.end());
  subset.proportion = proportion;
  return subset;
}

std::vector<Dataset> split_blocks(const Dataset& ds, Index num_blocks) {
  if (num_blocks < 1) throw ConfigError("num_blocks must be at least 1");
  const Index n = ds.size();
  if (num_blocks > n) {
    throw DataError("cannot split " + std::to_string(n) + " points into " +
                    std::to_string(num_blocks) + " blocks");
  }
  const Index base = n / num_blocks;
  const Index extra = n % num_blocks;
  std::vector<Dataset> blocks;
  blocks.reserve(static_cast<std::size_t>(num_blocks));
  Index start = 0;
  for (Index b = 0; b < num_blocks; ++b) {
    const Index len = base + (b < extra ? 1 : 0);
    std::vector<Index> idx(static_cast<std::size_t>(len));
    std::iota(idx.begin(), idx.end(), start);
    blocks.push_back(ds.subset(idx));
    start += len;
  }
  return blocks;
}

}  // namespace ardbscan
