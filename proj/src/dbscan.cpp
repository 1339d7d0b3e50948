#include "ardbscan/dbscan.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ardbscan {

namespace {

void validate(const DbscanParams& params) {
  if (!(params.eps >= 0.0) || !std::isfinite(params.eps)) {
    throw ConfigError("DBSCAN eps must be a finite non-negative value");
  }
  if (params.min_pts < 1) throw ConfigError("DBSCAN min_pts must be at least 1");
}

// Neighborhood sizes under the closed-ball predicate, self included.
std::vector<int> count_neighbors(const PointsRef& points, double eps) {
  const Index n = points.rows();
  const double eps2 = eps * eps;
  std::vector<int> counts(static_cast<std::size_t>(n), 1);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if ((points.row(i) - points.row(j)).squaredNorm() <= eps2) {
        ++counts[static_cast<std::size_t>(i)];
        ++counts[static_cast<std::size_t>(j)];
      }
    }
  }
  return counts;
}

}  // namespace

std::vector<int> neighborhood_sizes(const PointsRef& points, double eps) {
  return count_neighbors(points, eps);
}

ClusterResult run_dbscan(const PointsRef& points, const DbscanParams& params) {
  validate(params);
  const Index n = points.rows();
  ClusterResult result;
  result.assignment.assign(static_cast<std::size_t>(n), kNoise);
  if (n == 0) return result;

  // Neighbors are recomputed when a core point is expanded instead of being
  // stored, so memory stays O(n) even when eps covers the whole set. Every
  // point is expanded at most once, keeping the scan O(n^2).
  const double eps2 = params.eps * params.eps;
  const auto counts = count_neighbors(points, params.eps);
  auto is_core = [&](Index i) { return counts[static_cast<std::size_t>(i)] >= params.min_pts; };

  std::vector<Index> frontier;
  for (Index seed = 0; seed < n; ++seed) {
    if (result.assignment[static_cast<std::size_t>(seed)] != kNoise || !is_core(seed)) continue;
    const int id = result.num_clusters++;
    result.assignment[static_cast<std::size_t>(seed)] = id;
    frontier.assign(1, seed);
    while (!frontier.empty()) {
      const Index p = frontier.back();
      frontier.pop_back();
      for (Index q = 0; q < n; ++q) {
        auto& label = result.assignment[static_cast<std::size_t>(q)];
        if (label != kNoise) continue;
        if ((points.row(p) - points.row(q)).squaredNorm() > eps2) continue;
        label = id;
        if (is_core(q)) frontier.push_back(q);
      }
    }
  }
  return result;
}

Index central_object(const PointsRef& points, const std::vector<Index>& members) {
  Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(points.cols());
  for (Index m : members) centroid += points.row(m);
  centroid /= static_cast<double>(members.size());
  Index best = members.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (Index m : members) {
    const double d = (points.row(m) - centroid).squaredNorm();
    if (d < best_d || (d == best_d && m < best)) {
      best_d = d;
      best = m;
    }
  }
  return best;
}

std::vector<ClusterCenter> cluster_centers(const PointsRef& points, const ClusterResult& result) {
  if (static_cast<Index>(result.assignment.size()) != points.rows()) {
    throw ConfigError("cluster assignment is not aligned with points");
  }
  std::vector<ClusterCenter> centers;
  if (points.rows() == 0) return centers;

  std::vector<std::vector<Index>> members(static_cast<std::size_t>(result.num_clusters));
  for (Index i = 0; i < points.rows(); ++i) {
    const int c = result.assignment[static_cast<std::size_t>(i)];
    if (c != kNoise) members[static_cast<std::size_t>(c)].push_back(i);
  }
  std::vector<Index> everyone(static_cast<std::size_t>(points.rows()));
  std::iota(everyone.begin(), everyone.end(), Index{0});
  const Index partition_center = central_object(points, everyone);

  centers.reserve(members.size());
  for (const auto& m : members) {
    ClusterCenter c;
    if (m.empty()) {
      centers.push_back(std::move(c));
      continue;
    }
    c.center_index = central_object(points, m);
    c.center = points.row(c.center_index).transpose();
    c.center_distance = (points.row(c.center_index) - points.row(partition_center)).norm();
    c.size = static_cast<Index>(m.size());
    centers.push_back(std::move(c));
  }
  return centers;
}

}  // namespace ardbscan
