#pragma once

#include "ardbscan/types.hpp"

#include <span>

namespace ardbscan {

/// Counts of co-occurring (predicted, true) label values. Label values are
/// remapped to dense row/column indices in order of first appearance, so the
/// noise id is just another value.
struct ContingencyTable {
  Eigen::MatrixXd counts;
  Eigen::VectorXd row_sums;
  Eigen::VectorXd col_sums;
  double total = 0.0;
};

ContingencyTable contingency_table(std::span<const int> pred, std::span<const int> truth);

/// Normalized mutual information with arithmetic-mean normalization,
/// I / ((H(pred) + H(truth)) / 2). Returns 1 for two single-cluster labelings
/// and 0 when exactly one side has zero entropy.
double nmi(std::span<const int> pred, std::span<const int> truth);

/// Adjusted Rand index (Hubert-Arabie). Returns 1 when both labelings are
/// single-cluster or otherwise identical up to renaming.
double ari(std::span<const int> pred, std::span<const int> truth);

}  // namespace ardbscan
