#include "ardbscan/structured_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <utility>

namespace ardbscan {

namespace {

struct RankedEdge {
  Index u;
  Index v;
  double distance;
  Index entry_k;  // smallest k at which the union graph contains the edge
};

// Every edge of the union k-NN graph for k <= cap, sorted by the k at which
// it first appears (ties by endpoints).
std::vector<RankedEdge> ranked_edges(const NeighborRanking& ranking) {
  const auto n = static_cast<Index>(ranking.index.size());
  // Per row, (neighbor, rank) sorted by neighbor id for reverse lookups.
  std::vector<std::vector<std::pair<Index, Index>>> by_id(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto& row = ranking.index[static_cast<std::size_t>(i)];
    auto& lookup = by_id[static_cast<std::size_t>(i)];
    lookup.reserve(row.size());
    for (std::size_t r = 0; r < row.size(); ++r) lookup.emplace_back(row[r], static_cast<Index>(r));
    std::sort(lookup.begin(), lookup.end());
  }
  constexpr Index kAbsent = std::numeric_limits<Index>::max();
  auto rank_of = [&](Index row, Index target) {
    const auto& lookup = by_id[static_cast<std::size_t>(row)];
    auto it = std::lower_bound(lookup.begin(), lookup.end(), std::make_pair(target, Index{0}));
    return (it != lookup.end() && it->first == target) ? it->second : kAbsent;
  };

  std::vector<RankedEdge> edges;
  for (Index i = 0; i < n; ++i) {
    const auto& row = ranking.index[static_cast<std::size_t>(i)];
    for (std::size_t r = 0; r < row.size(); ++r) {
      const Index j = row[r];
      const auto mine = static_cast<Index>(r);
      const Index theirs = rank_of(j, i);
      // Emit each unordered pair once, from the endpoint that ranks it first.
      if (mine < theirs || (mine == theirs && i < j)) {
        edges.push_back({std::min(i, j), std::max(i, j),
                         ranking.distance[static_cast<std::size_t>(i)][r], mine + 1});
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [](const RankedEdge& a, const RankedEdge& b) {
    return std::tie(a.entry_k, a.u, a.v) < std::tie(b.entry_k, b.u, b.v);
  });
  return edges;
}

// Union graph made of the first `count` ranked edges.
StructuredGraph graph_from_prefix(Index n, Index k, const std::vector<RankedEdge>& ranked,
                                  std::size_t count) {
  double distance_sum = 0.0;
  for (std::size_t e = 0; e < count; ++e) distance_sum += ranked[e].distance;
  const double scale = distance_sum > 0.0 ? static_cast<double>(count) / distance_sum : 0.0;
  std::vector<WeightedEdge> edges;
  edges.reserve(count);
  for (std::size_t e = 0; e < count; ++e) {
    edges.push_back({ranked[e].u, ranked[e].v, std::exp(-ranked[e].distance * scale)});
  }
  std::sort(edges.begin(), edges.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return std::tie(a.u, a.v) < std::tie(b.u, b.v);
  });
  // Ranked edges are unique and loop-free by construction.
  StructuredGraph g;
  g.n = n;
  g.k = k;
  g.degrees = Eigen::VectorXd::Zero(n);
  for (const auto& e : edges) {
    g.degrees[e.u] += e.weight;
    g.degrees[e.v] += e.weight;
  }
  g.volume = g.degrees.sum();
  g.edges = std::move(edges);
  return g;
}

double entropy_of_degrees(const Eigen::VectorXd& degrees, double volume) {
  if (!(volume > 0.0)) throw DataError("degenerate graph: zero volume");
  double h = 0.0;
  for (Index v = 0; v < degrees.size(); ++v) {
    if (degrees[v] > 0.0) {
      const double p = degrees[v] / volume;
      h -= p * std::log2(p);
    }
  }
  return h;
}

}  // namespace

StructuredGraph make_graph(Index n, std::vector<WeightedEdge> edges, Index k) {
  StructuredGraph g;
  g.n = n;
  g.k = k;
  g.degrees = Eigen::VectorXd::Zero(n);
  std::set<std::pair<Index, Index>> seen;
  for (auto& e : edges) {
    if (e.u == e.v) throw ConfigError("self-loops are not allowed");
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.u < 0 || e.v >= n) throw ConfigError("edge endpoint out of range");
    if (!(e.weight > 0.0)) throw ConfigError("edge weights must be positive");
    if (!seen.emplace(e.u, e.v).second) throw ConfigError("duplicate edge");
    g.degrees[e.u] += e.weight;
    g.degrees[e.v] += e.weight;
  }
  g.edges = std::move(edges);
  g.volume = g.degrees.sum();
  return g;
}

Eigen::MatrixXd pairwise_distances(const PointsRef& points) {
  const Index n = points.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (points.row(i) - points.row(j)).norm();
    }
  }
  return d;
}

NeighborRanking rank_neighbors(const PointsRef& points, Index cap) {
  const Index n = points.rows();
  cap = std::clamp<Index>(cap, 0, std::max<Index>(n - 1, 0));
  NeighborRanking out;
  out.index.resize(static_cast<std::size_t>(n));
  out.distance.resize(static_cast<std::size_t>(n));
  std::vector<std::pair<double, Index>> row;
  for (Index i = 0; i < n; ++i) {
    row.clear();
    for (Index j = 0; j < n; ++j) {
      if (j != i) row.emplace_back((points.row(i) - points.row(j)).norm(), j);
    }
    std::partial_sort(row.begin(), row.begin() + cap, row.end());
    auto& idx = out.index[static_cast<std::size_t>(i)];
    auto& dist = out.distance[static_cast<std::size_t>(i)];
    idx.reserve(static_cast<std::size_t>(cap));
    dist.reserve(static_cast<std::size_t>(cap));
    for (Index r = 0; r < cap; ++r) {
      dist.push_back(row[static_cast<std::size_t>(r)].first);
      idx.push_back(row[static_cast<std::size_t>(r)].second);
    }
  }
  return out;
}

StructuredGraph build_knn_graph(const PointsRef& points, Index k) {
  const Index n = points.rows();
  if (k < 1 || k > n - 1) {
    throw ConfigError("k must lie in [1, n-1]; got k=" + std::to_string(k) +
                      " for n=" + std::to_string(n));
  }
  const auto ranked = ranked_edges(rank_neighbors(points, k));
  return graph_from_prefix(n, k, ranked, ranked.size());
}

double one_dim_se(const StructuredGraph& g) { return entropy_of_degrees(g.degrees, g.volume); }

double normalized_one_dim_se(const StructuredGraph& g) {
  if (g.k < 1 || g.n < 1) throw ConfigError("normalized entropy needs k >= 1 and n >= 1");
  return one_dim_se(g) / (static_cast<double>(g.k) * static_cast<double>(g.n));
}

KSelection select_k(const PointsRef& points, Index k_cap) {
  const Index n = points.rows();
  if (n < 3) throw DataError("too few points for stable-point detection (need at least 3)");
  const Index k_max = k_cap > 0 ? std::min(k_cap, n - 1) : n - 1;
  const auto ranked = ranked_edges(rank_neighbors(points, k_max));

  KSelection sel;
  sel.normalized_entropy.reserve(static_cast<std::size_t>(k_max));
  Eigen::VectorXd degrees(n);
  std::size_t count = 0;
  double distance_sum = 0.0;
  for (Index k = 1; k <= k_max; ++k) {
    while (count < ranked.size() && ranked[count].entry_k <= k) {
      distance_sum += ranked[count].distance;
      ++count;
    }
    const double scale = distance_sum > 0.0 ? static_cast<double>(count) / distance_sum : 0.0;
    degrees.setZero();
    for (std::size_t e = 0; e < count; ++e) {
      const double w = std::exp(-ranked[e].distance * scale);
      degrees[ranked[e].u] += w;
      degrees[ranked[e].v] += w;
    }
    const double h = entropy_of_degrees(degrees, degrees.sum());
    sel.normalized_entropy.push_back(h / (static_cast<double>(k) * static_cast<double>(n)));
  }

  const auto& h = sel.normalized_entropy;
  for (std::size_t i = 1; i + 1 < h.size(); ++i) {
    if (h[i] < h[i - 1] && h[i] < h[i + 1]) sel.stable_points.push_back(static_cast<Index>(i) + 1);
  }
  Index best = 0;
  if (!sel.stable_points.empty()) {
    best = sel.stable_points.front();
    for (Index k : sel.stable_points) {
      if (h[static_cast<std::size_t>(k - 1)] < h[static_cast<std::size_t>(best - 1)]) best = k;
    }
  } else {
    best = static_cast<Index>(std::min_element(h.begin(), h.end()) - h.begin()) + 1;
  }
  sel.k = best;

  std::size_t prefix = 0;
  while (prefix < ranked.size() && ranked[prefix].entry_k <= best) ++prefix;
  sel.graph = graph_from_prefix(n, best, ranked, prefix);
  return sel;
}

}  // namespace ardbscan
