#pragma once

#include "ardbscan/dataset.hpp"
#include "ardbscan/dbscan.hpp"
#include "ardbscan/search_env.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ardbscan {

/// Integer nearest to x, halves rounded up.
int round_half_up(double x);

/// Eps in (0, sqrt(d)] and MinPts in [1, max(1, round(fraction * size))],
/// with pi_eps steps spanning the eps range and start at the midpoint.
SearchLayer layer_zero(Index dim, Index partition_size, double minpts_cap_fraction,
                       double pi_eps, int pi_minpts);

/// Shrinks the step sizes by pi and recentres the bounds on `best`, clipped to
/// the layer-0 bounds. The new layer starts at `best`.
SearchLayer next_layer(const SearchLayer& prev, const SearchLayer& zero, const DbscanParams& best,
                       double pi_eps, int pi_minpts);

struct SearchConfig {
  double pi_eps = 5.0;
  int pi_minpts = 4;
  int max_layers = 3;
  int episodes = 15;
  double minpts_cap_fraction = 0.25;
  int round_budget = 30;
  int max_steps = 30;
  double reward_delta = 0.2;
  double exploration_start = 0.9;
  double exploration_end = 0.1;
  Td3Config td3;
  bool keep_traces = false;
};

struct LayerSummary {
  SearchLayer layer;
  DbscanParams best;
  double best_reward = 0.0;
  int episodes = 0;
  int rounds = 0;  // rounds spent in this layer
};

struct AgentResult {
  int agent = 0;
  std::vector<Index> partition;  // dataset row indices, ascending
  DbscanParams best;
  double best_reward = 0.0;
  /// Per round: parameters evaluated, their reward, and the best reward so far.
  std::vector<DbscanParams> round_params;
  std::vector<double> round_reward;
  std::vector<double> series;
  /// Best-so-far assignment after each round (shared between equal entries).
  std::vector<std::shared_ptr<const Labels>> round_best;
  ClusterResult final_clustering;
  std::vector<LayerSummary> layers;
  std::vector<EpisodeTrace> traces;
  std::map<std::string, int> stop_reasons;
};

/// Searches DBSCAN parameters for one partition. `labeled` holds dataset row
/// indices of the weakly supervised points; only those inside the partition
/// feed the reward. A partition without labeled points keeps the layer-0
/// start.
AgentResult run_agent(int agent, const Dataset& data, std::span<const Index> partition,
                      std::span<const Index> labeled, const SearchConfig& config,
                      std::uint64_t seed);

/// Fills the per-round fields of `out` from the environment's history.
void record_rounds(const SearchEnv& env, AgentResult& out);

/// Dataset-wide labeling: each agent's cluster ids are offset past the ones
/// before it, noise stays noise. Throws ConfigError on overlapping or
/// incomplete partitions.
ClusterResult merge_assignments(Index n, std::span<const std::vector<Index>> partitions,
                                std::span<const Labels* const> assignments);

ClusterResult merge_agent_results(std::span<const AgentResult> results, Index n);

/// Merged best-so-far labeling after round `round` (1-based); an agent that
/// used fewer rounds contributes its last one.
ClusterResult merged_at_round(std::span<const AgentResult> results, Index n, int round);

/// Seed for one agent derived from the run seed.
std::uint64_t agent_seed(std::uint64_t seed, int agent);

}  // namespace ardbscan
