#include "ardbscan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace ardbscan {

namespace {

void check_lengths(std::span<const int> pred, std::span<const int> truth, std::size_t min_len) {
  if (pred.size() != truth.size()) {
    throw ConfigError("label sequences differ in length (" + std::to_string(pred.size()) +
                      " vs " + std::to_string(truth.size()) + ")");
  }
  if (pred.size() < min_len) {
    throw ConfigError("at least " + std::to_string(min_len) + " labels are required");
  }
}

std::vector<Index> dense_ids(std::span<const int> labels, Index& count) {
  std::unordered_map<int, Index> ids;
  std::vector<Index> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = ids.try_emplace(l, static_cast<Index>(ids.size()));
    out.push_back(it->second);
  }
  count = static_cast<Index>(ids.size());
  return out;
}

double entropy(const Eigen::VectorXd& sums, double total) {
  double h = 0.0;
  for (Index i = 0; i < sums.size(); ++i) {
    if (sums[i] > 0.0) {
      const double p = sums[i] / total;
      h -= p * std::log(p);
    }
  }
  return h;
}

double choose2(double x) { return 0.5 * x * (x - 1.0); }

}  // namespace

ContingencyTable contingency_table(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth, 0);
  Index rows = 0;
  Index cols = 0;
  const auto r = dense_ids(pred, rows);
  const auto c = dense_ids(truth, cols);
  ContingencyTable table;
  table.counts = Eigen::MatrixXd::Zero(rows, cols);
  for (std::size_t i = 0; i < r.size(); ++i) table.counts(r[i], c[i]) += 1.0;
  table.row_sums = table.counts.rowwise().sum();
  table.col_sums = table.counts.colwise().sum().transpose();
  table.total = static_cast<double>(pred.size());
  return table;
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth, 1);
  const auto t = contingency_table(pred, truth);
  const double h_pred = entropy(t.row_sums, t.total);
  const double h_true = entropy(t.col_sums, t.total);
  if (t.row_sums.size() == 1 && t.col_sums.size() == 1) return 1.0;
  if (h_pred == 0.0 || h_true == 0.0) return 0.0;

  double mi = 0.0;
  for (Index i = 0; i < t.counts.rows(); ++i) {
    for (Index j = 0; j < t.counts.cols(); ++j) {
      const double nij = t.counts(i, j);
      if (nij > 0.0) {
        mi += nij / t.total * std::log(nij * t.total / (t.row_sums[i] * t.col_sums[j]));
      }
    }
  }
  const double value = mi / (0.5 * (h_pred + h_true));
  return std::clamp(value, 0.0, 1.0);
}

double ari(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth, 2);
  const auto t = contingency_table(pred, truth);
  const double index = t.counts.unaryExpr([](double x) { return choose2(x); }).sum();
  const double rows = t.row_sums.unaryExpr([](double x) { return choose2(x); }).sum();
  const double cols = t.col_sums.unaryExpr([](double x) { return choose2(x); }).sum();
  const double pairs = choose2(t.total);
  const double expected = rows * cols / pairs;
  const double max_index = 0.5 * (rows + cols);
  // Both labelings put every pair together, or both keep every pair apart.
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace ardbscan
