#include "ardbscan/encoding_tree.hpp"

#include "ardbscan/dbscan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>

namespace ardbscan {

namespace {

constexpr double kStrictDecrease = -1e-12;

double xlog2x(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

std::shared_ptr<const StructuredGraph> checked(std::shared_ptr<const StructuredGraph> graph) {
  if (!graph) throw ConfigError("encoding tree needs a graph");
  if (graph->n < 1) throw DataError("encoding tree needs at least one vertex");
  if (!(graph->volume > 0.0)) throw DataError("degenerate graph: zero volume");
  return graph;
}

}  // namespace

EncodingTree::EncodingTree(std::shared_ptr<const StructuredGraph> graph)
    : graph_(checked(std::move(graph))),
      leaf_of_vertex_(static_cast<std::size_t>(graph_->n), -1) {
  std::vector<Index> all(static_cast<std::size_t>(graph_->n));
  std::iota(all.begin(), all.end(), Index{0});
  add_node(-1, std::move(all), 0.0, graph_->volume);
}

Index EncodingTree::add_node(Index parent, std::vector<Index> vertices, double cut, double volume) {
  const auto id = static_cast<Index>(nodes_.size());
  TreeNode node;
  node.parent = parent;
  node.vertices = std::move(vertices);
  node.cut = cut;
  node.volume = volume;
  nodes_.push_back(std::move(node));
  if (parent >= 0) nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

EncodingTree EncodingTree::flat(std::shared_ptr<const StructuredGraph> graph) {
  EncodingTree tree(std::move(graph));
  const auto& g = *tree.graph_;
  for (Index v = 0; v < g.n; ++v) {
    const Index leaf = tree.add_node(root(), {v}, g.degrees[v], g.degrees[v]);
    tree.leaf_of_vertex_[static_cast<std::size_t>(v)] = leaf;
  }
  return tree;
}

EncodingTree EncodingTree::assemble(std::shared_ptr<const StructuredGraph> graph,
                                    const std::vector<std::vector<Index>>& blocks,
                                    std::span<const double> cuts,
                                    std::span<const double> volumes) {
  EncodingTree tree(std::move(graph));
  const auto& g = *tree.graph_;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Index parent = tree.add_node(root(), blocks[b], cuts[b], volumes[b]);
    for (Index v : blocks[b]) {
      const Index leaf = tree.add_node(parent, {v}, g.degrees[v], g.degrees[v]);
      tree.leaf_of_vertex_[static_cast<std::size_t>(v)] = leaf;
    }
  }
  return tree;
}

EncodingTree EncodingTree::from_partition(std::shared_ptr<const StructuredGraph> graph,
                                          const std::vector<std::vector<Index>>& blocks) {
  graph = checked(std::move(graph));
  const Index n = graph->n;
  std::vector<Index> block_of(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<Index>> sorted = blocks;
  for (std::size_t b = 0; b < sorted.size(); ++b) {
    if (sorted[b].empty()) throw ConfigError("partition blocks must be non-empty");
    std::sort(sorted[b].begin(), sorted[b].end());
    for (Index v : sorted[b]) {
      if (v < 0 || v >= n) throw ConfigError("partition vertex out of range");
      auto& slot = block_of[static_cast<std::size_t>(v)];
      if (slot != -1) throw ConfigError("partition blocks overlap at vertex " + std::to_string(v));
      slot = static_cast<Index>(b);
    }
  }
  if (std::find(block_of.begin(), block_of.end(), Index{-1}) != block_of.end()) {
    throw ConfigError("partition does not cover every vertex");
  }
  std::vector<double> cuts(sorted.size(), 0.0);
  std::vector<double> volumes(sorted.size(), 0.0);
  for (Index v = 0; v < n; ++v) {
    volumes[static_cast<std::size_t>(block_of[static_cast<std::size_t>(v)])] += graph->degrees[v];
  }
  for (const auto& e : graph->edges) {
    const Index bu = block_of[static_cast<std::size_t>(e.u)];
    const Index bv = block_of[static_cast<std::size_t>(e.v)];
    if (bu != bv) {
      cuts[static_cast<std::size_t>(bu)] += e.weight;
      cuts[static_cast<std::size_t>(bv)] += e.weight;
    }
  }
  return assemble(std::move(graph), sorted, cuts, volumes);
}

int EncodingTree::height() const {
  int best = 0;
  for (Index id = 1; id < node_count(); ++id) {
    int depth = 0;
    for (Index cur = id; cur != root(); cur = node(cur).parent) ++depth;
    best = std::max(best, depth);
  }
  return best;
}

std::vector<Index> EncodingTree::intermediate_nodes() const {
  std::vector<Index> out;
  for (Index c : node(root()).children) {
    if (!is_leaf(c)) out.push_back(c);
  }
  return out;
}

Index EncodingTree::leaf_of(Index vertex) const {
  if (vertex < 0 || vertex >= graph_->n) throw ConfigError("vertex out of range");
  return leaf_of_vertex_[static_cast<std::size_t>(vertex)];
}

double EncodingTree::node_entropy(Index id) const {
  const auto& n = node(id);
  if (n.parent < 0 || n.cut == 0.0) return 0.0;
  return -(n.cut / graph_->volume) * std::log2(n.volume / node(n.parent).volume);
}

double EncodingTree::entropy() const {
  double h = 0.0;
  for (Index id = 1; id < node_count(); ++id) h += node_entropy(id);
  return h;
}

NodeStatistics EncodingTree::statistics() const {
  NodeStatistics s;
  for (const auto& n : nodes_) {
    s.cut.push_back(n.cut);
    s.volume.push_back(n.volume);
  }
  return s;
}

NodeStatistics EncodingTree::scratch_statistics() const {
  const auto count = nodes_.size();
  NodeStatistics s{std::vector<double>(count, 0.0), std::vector<double>(count, 0.0)};
  auto path = [&](Index vertex) {
    std::vector<Index> p;
    for (Index cur = leaf_of(vertex); cur != root(); cur = node(cur).parent) p.push_back(cur);
    return p;
  };
  for (Index v = 0; v < graph_->n; ++v) {
    s.volume[0] += graph_->degrees[v];
    for (Index id : path(v)) s.volume[static_cast<std::size_t>(id)] += graph_->degrees[v];
  }
  for (const auto& e : graph_->edges) {
    const auto pu = path(e.u);
    const auto pv = path(e.v);
    for (Index id : pu) {
      if (std::find(pv.begin(), pv.end(), id) == pv.end()) s.cut[static_cast<std::size_t>(id)] += e.weight;
    }
    for (Index id : pv) {
      if (std::find(pu.begin(), pu.end(), id) == pu.end()) s.cut[static_cast<std::size_t>(id)] += e.weight;
    }
  }
  return s;
}

void EncodingTree::require_siblings(Index a, Index b) const {
  if (a < 0 || b < 0 || a >= node_count() || b >= node_count()) {
    throw ConfigError("operator node id out of range");
  }
  if (a == b) throw ConfigError("operator needs two distinct nodes");
  if (node(a).parent != root() || node(b).parent != root()) {
    throw ConfigError("operator operands must both be children of the root");
  }
}

double EncodingTree::weight_between(const std::vector<Index>& a, const std::vector<Index>& b) const {
  std::vector<signed char> side(static_cast<std::size_t>(graph_->n), 0);
  for (Index v : a) side[static_cast<std::size_t>(v)] = 1;
  for (Index v : b) side[static_cast<std::size_t>(v)] = 2;
  double w = 0.0;
  for (const auto& e : graph_->edges) {
    const int su = side[static_cast<std::size_t>(e.u)];
    const int sv = side[static_cast<std::size_t>(e.v)];
    if (su != 0 && sv != 0 && su != sv) w += e.weight;
  }
  return w;
}

double EncodingTree::group_into(Index a, Index b) {
  const double before = entropy();
  const TreeNode na = node(a);
  const TreeNode nb = node(b);
  std::vector<Index> vertices;
  std::merge(na.vertices.begin(), na.vertices.end(), nb.vertices.begin(), nb.vertices.end(),
             std::back_inserter(vertices));
  const double cut = na.cut + nb.cut - 2.0 * weight_between(na.vertices, nb.vertices);
  auto& siblings = nodes_[0].children;
  siblings.erase(std::remove_if(siblings.begin(), siblings.end(),
                                [&](Index c) { return c == a || c == b; }),
                 siblings.end());
  const Index joined = add_node(root(), std::move(vertices), cut, na.volume + nb.volume);

  std::vector<Index> dead;
  for (Index operand : {a, b}) {
    if (is_leaf(operand)) {
      nodes_[static_cast<std::size_t>(operand)].parent = joined;
      nodes_[static_cast<std::size_t>(joined)].children.push_back(operand);
    } else {
      for (Index c : node(operand).children) {
        nodes_[static_cast<std::size_t>(c)].parent = joined;
        nodes_[static_cast<std::size_t>(joined)].children.push_back(c);
      }
      dead.push_back(operand);
    }
  }
  remove_nodes(std::move(dead));
  return entropy() - before;
}

void EncodingTree::remove_nodes(std::vector<Index> dead) {
  if (dead.empty()) return;
  std::sort(dead.begin(), dead.end());
  std::vector<Index> remap(nodes_.size(), -1);
  std::vector<TreeNode> kept;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (!std::binary_search(dead.begin(), dead.end(), static_cast<Index>(id))) {
      remap[id] = static_cast<Index>(kept.size());
      kept.push_back(std::move(nodes_[id]));
    }
  }
  for (auto& n : kept) {
    if (n.parent >= 0) n.parent = remap[static_cast<std::size_t>(n.parent)];
    for (auto& c : n.children) c = remap[static_cast<std::size_t>(c)];
  }
  for (auto& leaf : leaf_of_vertex_) leaf = remap[static_cast<std::size_t>(leaf)];
  nodes_ = std::move(kept);
}

double EncodingTree::apply_merge(Index a, Index b) {
  require_siblings(a, b);
  if (is_leaf(a) && is_leaf(b)) return apply_combine(a, b);
  return group_into(a, b);
}

double EncodingTree::apply_combine(Index a, Index b) {
  require_siblings(a, b);
  if (!is_leaf(a) || !is_leaf(b)) {
    throw ConfigError("combine needs two leaves of the root; the result would exceed height 2");
  }
  return group_into(a, b);
}

OperatorResult merge_operator(const EncodingTree& tree, Index a, Index b) {
  OperatorResult out{tree, 0.0};
  out.delta = out.tree.apply_merge(a, b);
  return out;
}

OperatorResult combine_operator(const EncodingTree& tree, Index a, Index b) {
  OperatorResult out{tree, 0.0};
  out.delta = out.tree.apply_combine(a, b);
  return out;
}

namespace {

struct Block {
  double cut = 0.0;
  double volume = 0.0;
  double degree_log_sum = 0.0;  // sum of d log2 d over members
  Index min_vertex = 0;
  std::vector<Index> vertices;
  std::unordered_map<Index, double> links;  // neighboring block -> edge weight
  int version = 0;
  bool alive = true;
};

// Entropy of a root child holding the block's leaves (a singleton block is
// just the leaf itself; the formula gives the same value either way).
double block_entropy(double cut, double volume, double degree_log_sum, double total) {
  double h = (xlog2x(volume) - degree_log_sum) / total;
  if (cut > 0.0) h -= (cut / total) * std::log2(volume / total);
  return h;
}

struct Candidate {
  double delta;
  Index lo;  // smaller of the two blocks' minimum vertex ids
  Index hi;
  Index a;
  Index b;
  int version_a;
  int version_b;
};

struct WorseCandidate {
  bool operator()(const Candidate& x, const Candidate& y) const {
    return std::tie(x.delta, x.lo, x.hi) > std::tie(y.delta, y.lo, y.hi);
  }
};

}  // namespace

EncodingTree optimize_two_level(std::shared_ptr<const StructuredGraph> graph,
                                OptimizationTrace* trace) {
  graph = checked(std::move(graph));
  const auto& g = *graph;
  const double total = g.volume;

  std::vector<Block> blocks(static_cast<std::size_t>(g.n));
  for (Index v = 0; v < g.n; ++v) {
    auto& b = blocks[static_cast<std::size_t>(v)];
    b.cut = g.degrees[v];
    b.volume = g.degrees[v];
    b.degree_log_sum = xlog2x(g.degrees[v]);
    b.min_vertex = v;
    b.vertices = {v};
  }
  for (const auto& e : g.edges) {
    blocks[static_cast<std::size_t>(e.u)].links[e.v] += e.weight;
    blocks[static_cast<std::size_t>(e.v)].links[e.u] += e.weight;
  }
  std::vector<double> entropy(blocks.size());
  double current = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    entropy[i] = block_entropy(blocks[i].cut, blocks[i].volume, blocks[i].degree_log_sum, total);
    current += entropy[i];
  }
  if (trace) {
    *trace = OptimizationTrace{};
    trace->entropy.push_back(current);
  }

  auto candidate = [&](Index a, Index b, double w) {
    const auto& ba = blocks[static_cast<std::size_t>(a)];
    const auto& bb = blocks[static_cast<std::size_t>(b)];
    const double joined = block_entropy(ba.cut + bb.cut - 2.0 * w, ba.volume + bb.volume,
                                        ba.degree_log_sum + bb.degree_log_sum, total);
    const double delta = joined - entropy[static_cast<std::size_t>(a)] -
                         entropy[static_cast<std::size_t>(b)];
    return Candidate{delta,
                     std::min(ba.min_vertex, bb.min_vertex),
                     std::max(ba.min_vertex, bb.min_vertex),
                     a,
                     b,
                     ba.version,
                     bb.version};
  };

  std::priority_queue<Candidate, std::vector<Candidate>, WorseCandidate> queue;
  for (const auto& e : g.edges) {
    const double w = blocks[static_cast<std::size_t>(e.u)].links[e.v];
    queue.push(candidate(e.u, e.v, w));
  }

  while (!queue.empty()) {
    const Candidate top = queue.top();
    queue.pop();
    auto& ba = blocks[static_cast<std::size_t>(top.a)];
    auto& bb = blocks[static_cast<std::size_t>(top.b)];
    if (!ba.alive || !bb.alive || ba.version != top.version_a || bb.version != top.version_b) {
      continue;
    }
    if (!(top.delta < kStrictDecrease)) break;

    const bool combine = ba.vertices.size() == 1 && bb.vertices.size() == 1;
    // Keep the block with more links and fold the other into it.
    Index keep = top.a;
    Index gone = top.b;
    if (bb.links.size() > ba.links.size()) std::swap(keep, gone);
    auto& k = blocks[static_cast<std::size_t>(keep)];
    auto& d = blocks[static_cast<std::size_t>(gone)];
    const double w = k.links.at(gone);
    k.cut = k.cut + d.cut - 2.0 * w;
    k.volume += d.volume;
    k.degree_log_sum += d.degree_log_sum;
    k.min_vertex = std::min(k.min_vertex, d.min_vertex);
    k.vertices.insert(k.vertices.end(), d.vertices.begin(), d.vertices.end());
    k.links.erase(gone);
    for (const auto& [other, weight] : d.links) {
      if (other == keep) continue;
      k.links[other] += weight;
      auto& back = blocks[static_cast<std::size_t>(other)].links;
      back.erase(gone);
      back[keep] += weight;
    }
    d.links.clear();
    d.vertices.clear();
    d.alive = false;
    ++k.version;

    entropy[static_cast<std::size_t>(keep)] =
        block_entropy(k.cut, k.volume, k.degree_log_sum, total);
    current += top.delta;
    if (trace) {
      trace->entropy.push_back(current);
      trace->operations.emplace_back(top.lo, top.hi);
      (combine ? trace->combines : trace->merges) += 1;
    }
    for (const auto& [other, weight] : k.links) queue.push(candidate(keep, other, weight));
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].alive) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return blocks[x].min_vertex < blocks[y].min_vertex;
  });
  std::vector<std::vector<Index>> parts;
  std::vector<double> cuts;
  std::vector<double> volumes;
  for (std::size_t i : order) {
    auto vertices = blocks[i].vertices;
    std::sort(vertices.begin(), vertices.end());
    parts.push_back(std::move(vertices));
    cuts.push_back(blocks[i].cut);
    volumes.push_back(blocks[i].volume);
  }
  return EncodingTree::assemble(std::move(graph), parts, cuts, volumes);
}

double information_uncertainty(const EncodingTree& tree, Index node, Index k) {
  if (k < 1) throw ConfigError("information uncertainty needs k >= 1");
  if (node == EncodingTree::root() || tree.is_leaf(node)) {
    throw ConfigError("information uncertainty is defined for intermediate nodes only");
  }
  const auto children = static_cast<double>(tree.node(node).children.size());
  return tree.node_entropy(node) / (children * static_cast<double>(k));
}

std::vector<double> scale_uncertainties(std::span<const double> values, UncertaintyScale scale) {
  std::vector<double> out(values.begin(), values.end());
  if (out.empty() || scale == UncertaintyScale::kNone) return out;
  const auto [lo_it, hi_it] = std::minmax_element(out.begin(), out.end());
  const double lo = scale == UncertaintyScale::kMinMax ? *lo_it : 0.0;
  const double range = *hi_it - lo;
  for (double& v : out) v = range > 0.0 ? (v - lo) / range : 0.0;
  return out;
}

std::vector<int> group_uncertainties(std::span<const double> values, double eps, int min_pts) {
  PointMatrix column(static_cast<Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw ConfigError("uncertainty values must be finite");
    column(static_cast<Index>(i), 0) = values[i];
  }
  const auto result = run_dbscan(column, {eps, min_pts});
  std::vector<int> groups = result.assignment;
  int next = result.num_clusters;
  for (int& gid : groups) {
    if (gid == kNoise) gid = next++;
  }
  return groups;
}

AgentAllocation allocate_agents(const EncodingTree& tree, Index k, const AllocationConfig& config) {
  AgentAllocation out;
  for (Index c : tree.node(EncodingTree::root()).children) {
    if (tree.is_leaf(c)) {
      throw ConfigError("allocation needs every vertex below an intermediate node");
    }
    out.nodes.push_back(c);
    out.uncertainty.push_back(information_uncertainty(tree, c, k));
  }
  if (out.nodes.empty()) throw ConfigError("allocation needs at least one intermediate node");
  out.scaled_uncertainty = scale_uncertainties(out.uncertainty, config.scale);
  const auto groups = group_uncertainties(out.scaled_uncertainty, config.eps, config.min_pts);
  const int count = *std::max_element(groups.begin(), groups.end()) + 1;
  out.partitions.assign(static_cast<std::size_t>(count), {});
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    out.node_partition.push_back(groups[i]);
    const auto& vs = tree.node(out.nodes[i]).vertices;
    auto& part = out.partitions[static_cast<std::size_t>(groups[i])];
    part.insert(part.end(), vs.begin(), vs.end());
  }
  for (auto& part : out.partitions) std::sort(part.begin(), part.end());
  return out;
}

}  // namespace ardbscan
