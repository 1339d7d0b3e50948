#pragma once

#include "ardbscan/structured_graph.hpp"
#include "ardbscan/types.hpp"

#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace ardbscan {

struct TreeNode {
  Index parent = -1;  // -1 for the root
  std::vector<Index> children;
  std::vector<Index> vertices;  // T_alpha, ascending
  double cut = 0.0;             // g_alpha: weight leaving T_alpha
  double volume = 0.0;          // V_alpha: degree sum over T_alpha
};

struct OptimizationTrace {
  std::vector<double> entropy;  // before any operator, then after each one
  /// Smallest vertex of each operand, one pair per applied operator.
  std::vector<std::pair<Index, Index>> operations;
  int merges = 0;
  int combines = 0;
};

/// Per-node cut and volume, indexed like EncodingTree nodes.
struct NodeStatistics {
  std::vector<double> cut;
  std::vector<double> volume;
};

/// Encoding tree of height <= 2 over a structured graph.
///
/// Node 0 is the root. Leaves hold exactly one graph vertex. Cut and volume
/// are stored per node and updated incrementally by the operators;
/// scratch_statistics() recomputes them from the graph for cross-checking.
class EncodingTree {
 public:
  /// Root with one leaf per vertex.
  static EncodingTree flat(std::shared_ptr<const StructuredGraph> graph);

  /// Root -> one intermediate node per block -> leaves. Blocks must partition
  /// the vertex set; singleton blocks still get an intermediate node.
  static EncodingTree from_partition(std::shared_ptr<const StructuredGraph> graph,
                                     const std::vector<std::vector<Index>>& blocks);

  static constexpr Index root() noexcept { return 0; }
  Index node_count() const noexcept { return static_cast<Index>(nodes_.size()); }
  const TreeNode& node(Index id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const StructuredGraph& graph() const noexcept { return *graph_; }
  const std::shared_ptr<const StructuredGraph>& graph_ptr() const noexcept { return graph_; }

  bool is_leaf(Index id) const { return node(id).children.empty(); }
  int height() const;
  /// Non-leaf children of the root.
  std::vector<Index> intermediate_nodes() const;
  /// Leaf node holding `vertex`.
  Index leaf_of(Index vertex) const;

  /// -(g / vol) log2(V / V_parent); 0 when g = 0.
  double node_entropy(Index id) const;
  /// Sum of node entropies over all non-root nodes.
  double entropy() const;

  NodeStatistics statistics() const;
  NodeStatistics scratch_statistics() const;

  /// Mutating forms of the operators; both return the entropy change.
  double apply_merge(Index a, Index b);
  double apply_combine(Index a, Index b);

 private:
  friend EncodingTree optimize_two_level(std::shared_ptr<const StructuredGraph>,
                                         OptimizationTrace*);

  explicit EncodingTree(std::shared_ptr<const StructuredGraph> graph);
  static EncodingTree assemble(std::shared_ptr<const StructuredGraph> graph,
                               const std::vector<std::vector<Index>>& blocks,
                               std::span<const double> cuts, std::span<const double> volumes);
  Index add_node(Index parent, std::vector<Index> vertices, double cut, double volume);
  void require_siblings(Index a, Index b) const;
  double weight_between(const std::vector<Index>& a, const std::vector<Index>& b) const;
  double group_into(Index a, Index b);
  void remove_nodes(std::vector<Index> dead);

  std::shared_ptr<const StructuredGraph> graph_;
  std::vector<TreeNode> nodes_;
  std::vector<Index> leaf_of_vertex_;
};

struct OperatorResult {
  EncodingTree tree;
  double delta = 0.0;  // H_after - H_before
};

/// Joins two sibling subtrees into one node holding the children of both
/// (a leaf operand is carried over as a child). Two root-level leaves are
/// combined instead, since a merged leaf cannot exist. Throws ConfigError for
/// non-siblings, identical operands, or leaves below an intermediate node.
OperatorResult merge_operator(const EncodingTree& tree, Index a, Index b);

/// Inserts a new parent above two sibling subtrees. Only root-level leaves
/// qualify, anything else would exceed height 2 and is rejected.
OperatorResult combine_operator(const EncodingTree& tree, Index a, Index b);

/// Greedy two-level structural-entropy minimization from the flat tree.
///
/// Every candidate operator joins two root-level subtrees connected by at
/// least one edge; the most negative entropy change is applied first (ties
/// by lowest vertex ids) until no change is below -1e-12.
EncodingTree optimize_two_level(std::shared_ptr<const StructuredGraph> graph,
                                OptimizationTrace* trace = nullptr);

/// Node entropy normalized by child count and the graph's k.
double information_uncertainty(const EncodingTree& tree, Index node, Index k);

enum class UncertaintyScale {
  kNone,    // raw values
  kMax,     // divided by the largest value
  kMinMax,  // affine map onto [0, 1]
};

struct AllocationConfig {
  double eps = 0.3;
  int min_pts = 1;
  UncertaintyScale scale = UncertaintyScale::kMax;
};

struct AgentAllocation {
  std::vector<std::vector<Index>> partitions;  // vertex ids, ascending
  std::vector<Index> nodes;                    // intermediate nodes considered
  std::vector<double> uncertainty;             // raw values, aligned with nodes
  std::vector<double> scaled_uncertainty;      // values fed to the grouping
  std::vector<Index> node_partition;           // partition of each node
};

/// 1-D DBSCAN over the given values; noise nodes get singleton groups after
/// the clustered ones. Returns a dense group id per value.
std::vector<int> group_uncertainties(std::span<const double> values, double eps, int min_pts);

std::vector<double> scale_uncertainties(std::span<const double> values, UncertaintyScale scale);

AgentAllocation allocate_agents(const EncodingTree& tree, Index k, const AllocationConfig& config);

}  // namespace ardbscan
