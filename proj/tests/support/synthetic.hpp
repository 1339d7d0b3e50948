#pragma once

#include "ardbscan/dataset.hpp"
#include "ardbscan/structured_graph.hpp"

#include <random>
#include <vector>

namespace synthetic {

using ardbscan::Index;

inline ardbscan::PointMatrix uniform_points(Index n, Index d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ardbscan::PointMatrix x(n, d);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  return x;
}

inline ardbscan::Labels random_labels(std::size_t n, int values, std::mt19937_64& rng, bool with_noise = false) {
  std::uniform_int_distribution<int> u(with_noise ? -1 : 0, values - 1);
  ardbscan::Labels out(n);
  for (auto& v : out) v = u(rng);
  return out;
}

struct Blob {
  double x, y, spread;
  Index count;
};

// Gaussian blobs in the plane, labelled by blob.
inline ardbscan::Dataset blobs(const std::vector<Blob>& spec, std::mt19937_64& rng) {
  Index n = 0;
  for (const auto& b : spec) n += b.count;
  ardbscan::Dataset ds;
  ds.points.resize(n, 2);
  ds.labels = ardbscan::Labels(static_cast<std::size_t>(n));
  Index row = 0;
  for (std::size_t c = 0; c < spec.size(); ++c) {
    std::normal_distribution<double> gx(spec[c].x, spec[c].spread), gy(spec[c].y, spec[c].spread);
    for (Index i = 0; i < spec[c].count; ++i, ++row) {
      ds.points(row, 0) = gx(rng);
      ds.points(row, 1) = gy(rng);
      (*ds.labels)[static_cast<std::size_t>(row)] = static_cast<int>(c);
    }
  }
  return ds;
}

inline ardbscan::Dataset three_blobs(std::mt19937_64& rng, Index per_blob = 60) {
  return blobs({{0.0, 0.0, 0.05, per_blob}, {1.0, 0.0, 0.05, per_blob}, {0.5, 1.0, 0.05, per_blob}}, rng);
}

// Dense and sparse blobs of very different density, in the spirit of
// unbalanced benchmark sets.
inline ardbscan::Dataset unbalanced(std::mt19937_64& rng) {
  return blobs({{0.0, 0.0, 0.02, 200},
                {0.3, 0.0, 0.02, 200},
                {0.15, 0.25, 0.02, 200},
                {3.0, 3.0, 0.25, 25},
                {5.0, 3.0, 0.25, 25},
                {3.0, 5.0, 0.25, 25},
                {5.0, 5.0, 0.25, 25},
                {4.0, 6.5, 0.25, 25}},
               rng);
}

// Two 5-cliques of unit weight joined by one weak bridge (4, 5).
inline ardbscan::StructuredGraph two_cliques(double bridge = 0.1) {
  std::vector<ardbscan::WeightedEdge> edges;
  for (Index base : {Index{0}, Index{5}}) {
    for (Index i = 0; i < 5; ++i) {
      for (Index j = i + 1; j < 5; ++j) edges.push_back({base + i, base + j, 1.0});
    }
  }
  edges.push_back({4, 5, bridge});
  return ardbscan::make_graph(10, std::move(edges));
}

// Random connected weighted graph: a path plus random chords.
inline ardbscan::StructuredGraph random_graph(Index n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(0.05, 1.0), coin(0.0, 1.0);
  std::vector<ardbscan::WeightedEdge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (j == i + 1 || coin(rng) < density) edges.push_back({i, j, w(rng)});
    }
  }
  return ardbscan::make_graph(n, std::move(edges));
}

}  // namespace synthetic
