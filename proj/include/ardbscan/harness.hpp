#pragma once

#include "ardbscan/dataset.hpp"
#include "ardbscan/encoding_tree.hpp"
#include "ardbscan/recursive_search.hpp"
#include "ardbscan/structured_graph.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ardbscan {

enum class Mode { kOffline, kOnline };

/// Every tunable of a run. Keys in the JSON form match the member names.
struct RunConfig {
  std::string dataset;
  bool has_labels = true;
  Mode mode = Mode::kOffline;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  double label_proportion = 0.2;
  double pi_eps = 5.0;
  int pi_minpts = 4;
  int max_steps = 30;
  double reward_delta = 0.2;
  int fcn_hidden = 32;
  int mlp_hidden = 256;
  double gamma = 0.1;
  int batch_size = 16;
  int episodes = 15;
  std::optional<int> max_layers;              // 3 offline, 6 online
  std::optional<double> minpts_cap_fraction;  // 0.25 offline, 0.0025 online
  double alloc_eps = 0.3;
  int alloc_minpts = 1;
  int num_blocks = 8;
  int k_cap = 2048;
  int round_budget = 30;
  int buffer_capacity = 2000;
  double tau = 0.005;
  double learning_rate = 1e-3;
  int policy_delay = 2;
  double exploration_start = 0.9;
  double exploration_end = 0.1;
  UncertaintyScale uncertainty_scale = UncertaintyScale::kMax;
  bool single_agent = false;
  bool normalize = true;

  int resolved_max_layers() const;
  double resolved_minpts_cap_fraction() const;
  SearchConfig search_config() const;
  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Unknown keys and mistyped values throw ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::filesystem::path& path);

UncertaintyScale parse_uncertainty_scale(const std::string& name);
std::string uncertainty_scale_name(UncertaintyScale s);

/// Structural part of the pipeline: k selection, encoding tree, allocation.
struct Structure {
  KSelection selection;
  std::optional<EncodingTree> tree;
  AgentAllocation allocation;
};

/// `data` should already be normalized. With single_agent the allocation is
/// one partition holding every point.
Structure build_structure(const Dataset& data, const RunConfig& config);

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<AgentResult> agents;
  ClusterResult merged;
  double nmi = 0.0;
  double ari = 0.0;
  /// Dataset-wide metrics of the merged best-so-far labeling per round, and
  /// their running maxima. Length equals the round budget.
  std::vector<double> round_nmi, round_ari;
  std::vector<double> round_nmi_max, round_ari_max;
  double seconds = 0.0;
};

struct Summary {
  double mean = 0.0;
  double variance = 0.0;  // population variance over seeds
};

Summary summarize(const std::vector<double>& values);

struct RunReport {
  std::string command;
  RunConfig config;
  Index points = 0;
  Index dim = 0;
  Structure structure;
  std::vector<SeedRun> runs;
  Summary nmi;
  Summary ari;
  double seconds = 0.0;
};

/// Full offline pipeline on one dataset: normalize, structure, then per seed
/// sample the labeled subset, run every agent and merge.
RunReport run_pipeline(const Dataset& raw, const RunConfig& config, bool keep_first_traces = false);

/// Uniform random (eps, min_pts) draws inside the layer-0 bounds of the whole
/// dataset, one clustering round each, scored like the agents.
RunReport run_random_baseline(const Dataset& raw, const RunConfig& config);

nlohmann::json report_json(const RunReport& report);
nlohmann::json tree_json(const EncodingTree& tree, Index k);
nlohmann::json allocation_json(const Structure& structure, const RunConfig& config);
nlohmann::json trace_json(const EpisodeTrace& trace, int agent);

/// Scatter of the first two features, one colour per cluster, noise grey.
std::string clusters_svg(const PointsRef& points, const Labels& assignment);

struct OutputOptions {
  std::filesystem::path out_dir = ".";
  bool traces = false;
};

Dataset load_dataset(const RunConfig& config);

RunReport cmd_cluster(const RunConfig& config, const OutputOptions& out);
nlohmann::json cmd_allocate(const RunConfig& config, const OutputOptions& out);
nlohmann::json cmd_online(const RunConfig& config, const OutputOptions& out);
RunReport cmd_baseline_random(const RunConfig& config, const OutputOptions& out);

}  // namespace ardbscan
