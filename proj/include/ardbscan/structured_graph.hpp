#pragma once

#include "ardbscan/types.hpp"

#include <vector>

namespace ardbscan {

struct WeightedEdge {
  Index u = 0;  // u < v
  Index v = 0;
  double weight = 0.0;
};

/// Weighted undirected simple graph with cached degrees and volume.
struct StructuredGraph {
  Index n = 0;
  Index k = 0;  // neighbor count the graph was built with (0 if hand-made)
  std::vector<WeightedEdge> edges;
  Eigen::VectorXd degrees;
  double volume = 0.0;
};

/// Builds a graph from explicit weights; duplicate pairs and self-loops are
/// rejected.
StructuredGraph make_graph(Index n, std::vector<WeightedEdge> edges, Index k = 0);

Eigen::MatrixXd pairwise_distances(const PointsRef& points);

/// Each row's nearest neighbors in (distance, index) order, truncated to
/// `cap` entries. Rows exclude the point itself.
struct NeighborRanking {
  std::vector<std::vector<Index>> index;
  std::vector<std::vector<double>> distance;
};

NeighborRanking rank_neighbors(const PointsRef& points, Index cap);

/// Union k-NN graph: {i, j} is an edge when either endpoint lists the other
/// among its k nearest. Weights are exp(-D_ij * |E| / sum of D over E).
StructuredGraph build_knn_graph(const PointsRef& points, Index k);

/// -sum_v (d_v / vol) log2(d_v / vol). Throws DataError on a zero-volume graph.
double one_dim_se(const StructuredGraph& g);

/// one_dim_se(g) / (k * n).
double normalized_one_dim_se(const StructuredGraph& g);

struct KSelection {
  Index k = 0;
  StructuredGraph graph;
  std::vector<double> normalized_entropy;  // entry k-1 holds the value for k
  std::vector<Index> stable_points;        // interior strict local minima, ascending k
};

/// Sweeps k = 1..min(n-1, k_cap) and returns the stable point (strict local
/// minimum of the normalized entropy) with the smallest value, falling back to
/// the global minimizer when there is no interior minimum. `k_cap <= 0` means
/// no cap beyond n-1.
KSelection select_k(const PointsRef& points, Index k_cap = 0);

}  // namespace ardbscan
