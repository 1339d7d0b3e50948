#include "ardbscan/recursive_search.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

namespace ardbscan {

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

SearchLayer layer_zero(Index dim, Index partition_size, double minpts_cap_fraction,
                       double pi_eps, int pi_minpts) {
  if (dim < 1) throw ConfigError("dimension must be positive");
  if (partition_size < 1) throw ConfigError("partition must be non-empty");
  if (!(pi_eps > 0.0) || pi_minpts < 1) throw ConfigError("search space sizes must be positive");
  if (!(minpts_cap_fraction > 0.0)) throw ConfigError("minpts_cap_fraction must be positive");
  SearchLayer z;
  z.index = 0;
  z.eps_lo = 0.0;
  z.eps_hi = std::sqrt(static_cast<double>(dim));
  z.eps_step = (z.eps_hi - z.eps_lo) / pi_eps;
  z.minpts_lo = 1;
  z.minpts_hi = std::max(1, round_half_up(minpts_cap_fraction * static_cast<double>(partition_size)));
  z.minpts_step = std::max((z.minpts_hi - z.minpts_lo) / pi_minpts, 1);
  z.start = {0.5 * (z.eps_lo + z.eps_hi), round_half_up(0.5 * (z.minpts_lo + z.minpts_hi))};
  return z;
}

SearchLayer next_layer(const SearchLayer& prev, const SearchLayer& zero, const DbscanParams& best,
                       double pi_eps, int pi_minpts) {
  if (!(pi_eps > 0.0) || pi_minpts < 1) throw ConfigError("search space sizes must be positive");
  SearchLayer l;
  l.index = prev.index + 1;
  l.eps_step = prev.eps_step / pi_eps;
  l.minpts_step =
      std::max(static_cast<int>(std::floor(static_cast<double>(prev.minpts_step) / pi_minpts + 0.5)), 1);
  const double eps_half = 0.5 * pi_eps * l.eps_step;
  const double minpts_half = 0.5 * pi_minpts * l.minpts_step;
  l.eps_lo = std::max(zero.eps_lo, best.eps - eps_half);
  l.eps_hi = std::min(zero.eps_hi, best.eps + eps_half);
  l.minpts_lo = std::max(zero.minpts_lo, round_half_up(best.min_pts - minpts_half));
  l.minpts_hi = std::min(zero.minpts_hi, round_half_up(best.min_pts + minpts_half));
  l.start = best;
  return l;
}

std::uint64_t agent_seed(std::uint64_t seed, int agent) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(agent), 0x5eedu};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

AgentResult run_agent(int agent, const Dataset& data, std::span<const Index> partition,
                      std::span<const Index> labeled, const SearchConfig& config,
                      std::uint64_t seed) {
  if (partition.empty()) throw ConfigError("agent partition is empty");
  if (config.max_layers < 1) throw ConfigError("max_layers must be at least 1");
  if (config.episodes < 1) throw ConfigError("episodes must be at least 1");
  if (config.max_steps < 1) throw ConfigError("max_steps must be at least 1");

  AgentResult out;
  out.agent = agent;
  out.partition.assign(partition.begin(), partition.end());
  std::sort(out.partition.begin(), out.partition.end());
  if (std::adjacent_find(out.partition.begin(), out.partition.end()) != out.partition.end()) {
    throw ConfigError("agent partition repeats a point");
  }
  const auto size = static_cast<Index>(out.partition.size());

  PointMatrix points(size, data.dim());
  for (Index i = 0; i < size; ++i) points.row(i) = data.points.row(out.partition[static_cast<std::size_t>(i)]);

  std::vector<Index> local_labeled;
  Labels truth;
  for (Index g : labeled) {
    auto it = std::lower_bound(out.partition.begin(), out.partition.end(), g);
    if (it == out.partition.end() || *it != g) continue;
    if (!data.has_labels()) throw ConfigError("labeled subset given for a dataset without labels");
    local_labeled.push_back(static_cast<Index>(it - out.partition.begin()));
    truth.push_back((*data.labels)[static_cast<std::size_t>(g)]);
  }

  SearchEnv env(std::move(points), std::move(local_labeled), std::move(truth), config.round_budget);
  std::mt19937_64 rng(agent_seed(seed, agent));
  const SearchLayer zero =
      layer_zero(data.dim(), size, config.minpts_cap_fraction, config.pi_eps, config.pi_minpts);

  SearchLayer layer = zero;
  DbscanParams best = zero.start;
  const EpisodeConfig episode_config{config.max_steps, config.reward_delta, 0.0};

  for (int l = 0; l < config.max_layers; ++l) {
    if (l > 0) layer = next_layer(layer, zero, best, config.pi_eps, config.pi_minpts);
    const int remaining = env.round_budget() - env.rounds_used();
    const int layers_left = config.max_layers - l;
    const int rounds_before = env.rounds_used();
    env.set_round_limit(rounds_before + (remaining + layers_left - 1) / layers_left);

    LayerSummary summary;
    summary.layer = layer;
    DbscanParams layer_best = layer.start;
    double layer_best_reward = env.evaluate(layer.start).reward;

    if (env.has_labels()) {
      Td3Agent net(env.points().cols() + 2, config.td3, rng);
      ReplayBuffer buffer(config.td3.buffer_capacity);
      for (int e = 0; e < config.episodes; ++e) {
        EpisodeConfig ec = episode_config;
        ec.exploration = config.episodes == 1
                             ? config.exploration_start
                             : config.exploration_start + (config.exploration_end - config.exploration_start) *
                                                              e / (config.episodes - 1);
        EpisodeTrace trace = run_episode(env, net, buffer, layer, ec, rng);
        trace.episode = e;
        for (const auto& s : trace.steps) {
          if (s.immediate > layer_best_reward) {
            layer_best_reward = s.immediate;
            layer_best = s.params;
          }
        }
        ++out.stop_reasons[std::string(stop_reason_name(trace.stop))];
        ++summary.episodes;
        const bool exhausted = trace.stop == StopReason::kBudget;
        if (config.keep_traces) out.traces.push_back(std::move(trace));
        if (exhausted) break;
      }
    }
    best = layer_best;
    summary.best = layer_best;
    summary.best_reward = layer_best_reward;
    summary.rounds = env.rounds_used() - rounds_before;
    out.layers.push_back(summary);
  }

  out.best = best;
  out.best_reward = env.find(best)->reward;
  out.final_clustering = env.find(best)->clustering;

  record_rounds(env, out);
  return out;
}

void record_rounds(const SearchEnv& env, AgentResult& out) {
  out.round_params.clear();
  out.round_reward.clear();
  out.series.clear();
  out.round_best.clear();
  std::shared_ptr<const Labels> current;
  double running = -1.0;
  for (const auto& p : env.history()) {
    const Evaluation* ev = env.find(p);
    out.round_params.push_back(p);
    out.round_reward.push_back(ev->reward);
    if (ev->reward > running) {
      running = ev->reward;
      current = std::make_shared<const Labels>(ev->clustering.assignment);
    }
    out.series.push_back(running);
    out.round_best.push_back(current);
  }
}

ClusterResult merge_assignments(Index n, std::span<const std::vector<Index>> partitions,
                                std::span<const Labels* const> assignments) {
  if (partitions.size() != assignments.size()) throw ConfigError("one assignment per partition is required");
  ClusterResult merged;
  merged.assignment.assign(static_cast<std::size_t>(n), kNoise);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  int offset = 0;
  for (std::size_t a = 0; a < partitions.size(); ++a) {
    const auto& part = partitions[a];
    const Labels& labels = *assignments[a];
    if (labels.size() != part.size()) throw ConfigError("assignment does not match its partition");
    int clusters = 0;
    for (std::size_t i = 0; i < part.size(); ++i) {
      const Index row = part[i];
      if (row < 0 || row >= n) throw ConfigError("partition index out of range");
      if (seen[static_cast<std::size_t>(row)]) throw ConfigError("partitions overlap at point " + std::to_string(row));
      seen[static_cast<std::size_t>(row)] = 1;
      if (labels[i] != kNoise) {
        merged.assignment[static_cast<std::size_t>(row)] = labels[i] + offset;
        clusters = std::max(clusters, labels[i] + 1);
      }
    }
    offset += clusters;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw ConfigError("partitions do not cover every point");
  }
  merged.num_clusters = offset;
  return merged;
}

ClusterResult merge_agent_results(std::span<const AgentResult> results, Index n) {
  std::vector<std::vector<Index>> parts;
  std::vector<const Labels*> labels;
  for (const auto& r : results) {
    parts.push_back(r.partition);
    labels.push_back(&r.final_clustering.assignment);
  }
  return merge_assignments(n, parts, labels);
}

ClusterResult merged_at_round(std::span<const AgentResult> results, Index n, int round) {
  if (round < 1) throw ConfigError("rounds are numbered from 1");
  std::vector<std::vector<Index>> parts;
  std::vector<const Labels*> labels;
  for (const auto& r : results) {
    if (r.round_best.empty()) throw ConfigError("agent result has no rounds");
    const auto idx = std::min(static_cast<std::size_t>(round), r.round_best.size()) - 1;
    parts.push_back(r.partition);
    labels.push_back(r.round_best[idx].get());
  }
  return merge_assignments(n, parts, labels);
}

}  // namespace ardbscan
