#pragma once

#include "ardbscan/types.hpp"

#include <vector>

namespace ardbscan {

struct DbscanParams {
  double eps = 0.0;  // closed-ball radius, >= 0
  int min_pts = 1;   // neighborhood size including the point itself
};

struct ClusterResult {
  Labels assignment;  // kNoise or a cluster id in [0, num_clusters)
  int num_clusters = 0;
};

/// Exact DBSCAN with Euclidean closed-ball neighborhoods.
///
/// Clusters are grown in index order: the lowest-index unvisited core point
/// seeds cluster 0, and so on. A border point reachable from several clusters
/// keeps the first cluster that reached it, so the output is a deterministic
/// function of the input order.
ClusterResult run_dbscan(const PointsRef& points, const DbscanParams& params);

/// Number of points within `eps` of each point, the point itself included.
std::vector<int> neighborhood_sizes(const PointsRef& points, double eps);

struct ClusterCenter {
  Eigen::VectorXd center;  // features of the cluster's central object
  Index center_index = 0;  // row of the central object
  double center_distance = 0.0;
  Index size = 0;
};

/// Row of the member closest to the centroid of `members` (ties -> lowest row).
Index central_object(const PointsRef& points, const std::vector<Index>& members);

/// One entry per cluster id. The central object of a cluster is the member
/// nearest its centroid; `center_distance` is measured to the central object
/// of the whole point set.
std::vector<ClusterCenter> cluster_centers(const PointsRef& points, const ClusterResult& result);

}  // namespace ardbscan
