#include "ardbscan/harness.hpp"

#include "ardbscan/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

namespace ardbscan {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename T>
T read(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

int RunConfig::resolved_max_layers() const {
  return max_layers.value_or(mode == Mode::kOnline ? 6 : 3);
}

double RunConfig::resolved_minpts_cap_fraction() const {
  return minpts_cap_fraction.value_or(mode == Mode::kOnline ? 0.0025 : 0.25);
}

SearchConfig RunConfig::search_config() const {
  SearchConfig s;
  s.pi_eps = pi_eps;
  s.pi_minpts = pi_minpts;
  s.max_layers = resolved_max_layers();
  s.episodes = episodes;
  s.minpts_cap_fraction = resolved_minpts_cap_fraction();
  s.round_budget = round_budget;
  s.max_steps = max_steps;
  s.reward_delta = reward_delta;
  s.exploration_start = exploration_start;
  s.exploration_end = exploration_end;
  s.td3.encoder_hidden = fcn_hidden;
  s.td3.mlp_hidden = mlp_hidden;
  s.td3.gamma = gamma;
  s.td3.batch_size = static_cast<std::size_t>(batch_size);
  s.td3.tau = tau;
  s.td3.learning_rate = learning_rate;
  s.td3.policy_delay = policy_delay;
  s.td3.buffer_capacity = static_cast<std::size_t>(buffer_capacity);
  return s;
}

void RunConfig::validate() const {
  require(!seeds.empty(), "at least one seed is required");
  require(label_proportion > 0.0 && label_proportion <= 1.0, "label_proportion must lie in (0, 1]");
  require(pi_eps > 0.0, "pi_eps must be positive");
  require(pi_minpts >= 1, "pi_minpts must be at least 1");
  require(max_steps >= 1, "max_steps must be at least 1");
  require(reward_delta >= 0.0 && reward_delta <= 1.0, "reward_delta must lie in [0, 1]");
  require(fcn_hidden >= 1 && mlp_hidden >= 1, "hidden widths must be positive");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(episodes >= 1, "episodes must be at least 1");
  require(resolved_max_layers() >= 1, "max_layers must be at least 1");
  require(resolved_minpts_cap_fraction() > 0.0, "minpts_cap_fraction must be positive");
  require(alloc_eps >= 0.0, "alloc_eps must be non-negative");
  require(alloc_minpts >= 1, "alloc_minpts must be at least 1");
  require(num_blocks >= 1, "num_blocks must be at least 1");
  require(k_cap >= 1, "k_cap must be at least 1");
  require(round_budget >= 1, "round budget must be positive");
  require(buffer_capacity >= batch_size, "buffer_capacity must be at least batch_size");
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(policy_delay >= 1, "policy_delay must be at least 1");
  require(exploration_start >= 0.0 && exploration_start <= 1.0 && exploration_end >= 0.0 &&
              exploration_end <= 1.0,
          "exploration rates must lie in [0, 1]");
}

UncertaintyScale parse_uncertainty_scale(const std::string& name) {
  if (name == "none") return UncertaintyScale::kNone;
  if (name == "max") return UncertaintyScale::kMax;
  if (name == "minmax") return UncertaintyScale::kMinMax;
  throw ConfigError("uncertainty_scale must be none, max or minmax");
}

std::string uncertainty_scale_name(UncertaintyScale s) {
  switch (s) {
    case UncertaintyScale::kNone: return "none";
    case UncertaintyScale::kMax: return "max";
    case UncertaintyScale::kMinMax: return "minmax";
  }
  return "max";
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  using Setter = std::function<void(const json&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"dataset", [&](const json& v, const std::string& k) { c.dataset = read<std::string>(v, k); }},
      {"has_labels", [&](const json& v, const std::string& k) { c.has_labels = read<bool>(v, k); }},
      {"mode",
       [&](const json& v, const std::string& k) {
         const auto m = read<std::string>(v, k);
         if (m == "offline") c.mode = Mode::kOffline;
         else if (m == "online") c.mode = Mode::kOnline;
         else throw ConfigError("mode must be offline or online");
       }},
      {"seeds",
       [&](const json& v, const std::string& k) {
         if (!v.is_array()) throw ConfigError("seeds must be an array of non-negative integers");
         c.seeds.clear();
         for (const auto& s : v) {
           if (!s.is_number_integer() || s.get<long long>() < 0) {
             throw ConfigError("seeds must be an array of non-negative integers");
           }
           c.seeds.push_back(read<std::uint64_t>(s, k));
         }
       }},
      {"label_proportion", [&](const json& v, const std::string& k) { c.label_proportion = read<double>(v, k); }},
      {"pi_eps", [&](const json& v, const std::string& k) { c.pi_eps = read<double>(v, k); }},
      {"pi_minpts", [&](const json& v, const std::string& k) { c.pi_minpts = read<int>(v, k); }},
      {"max_steps", [&](const json& v, const std::string& k) { c.max_steps = read<int>(v, k); }},
      {"reward_delta", [&](const json& v, const std::string& k) { c.reward_delta = read<double>(v, k); }},
      {"fcn_hidden", [&](const json& v, const std::string& k) { c.fcn_hidden = read<int>(v, k); }},
      {"mlp_hidden", [&](const json& v, const std::string& k) { c.mlp_hidden = read<int>(v, k); }},
      {"gamma", [&](const json& v, const std::string& k) { c.gamma = read<double>(v, k); }},
      {"batch_size", [&](const json& v, const std::string& k) { c.batch_size = read<int>(v, k); }},
      {"episodes", [&](const json& v, const std::string& k) { c.episodes = read<int>(v, k); }},
      {"max_layers",
       [&](const json& v, const std::string& k) {
         if (v.is_null()) c.max_layers.reset();
         else c.max_layers = read<int>(v, k);
       }},
      {"minpts_cap_fraction",
       [&](const json& v, const std::string& k) {
         if (v.is_null()) c.minpts_cap_fraction.reset();
         else c.minpts_cap_fraction = read<double>(v, k);
       }},
      {"alloc_eps", [&](const json& v, const std::string& k) { c.alloc_eps = read<double>(v, k); }},
      {"alloc_minpts", [&](const json& v, const std::string& k) { c.alloc_minpts = read<int>(v, k); }},
      {"num_blocks", [&](const json& v, const std::string& k) { c.num_blocks = read<int>(v, k); }},
      {"k_cap", [&](const json& v, const std::string& k) { c.k_cap = read<int>(v, k); }},
      {"round_budget", [&](const json& v, const std::string& k) { c.round_budget = read<int>(v, k); }},
      {"buffer_capacity", [&](const json& v, const std::string& k) { c.buffer_capacity = read<int>(v, k); }},
      {"tau", [&](const json& v, const std::string& k) { c.tau = read<double>(v, k); }},
      {"learning_rate", [&](const json& v, const std::string& k) { c.learning_rate = read<double>(v, k); }},
      {"policy_delay", [&](const json& v, const std::string& k) { c.policy_delay = read<int>(v, k); }},
      {"exploration_start", [&](const json& v, const std::string& k) { c.exploration_start = read<double>(v, k); }},
      {"exploration_end", [&](const json& v, const std::string& k) { c.exploration_end = read<double>(v, k); }},
      {"uncertainty_scale",
       [&](const json& v, const std::string& k) { c.uncertainty_scale = parse_uncertainty_scale(read<std::string>(v, k)); }},
      {"single_agent", [&](const json& v, const std::string& k) { c.single_agent = read<bool>(v, k); }},
      {"normalize", [&](const json& v, const std::string& k) { c.normalize = read<bool>(v, k); }},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(value, key);
  }
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  j["has_labels"] = c.has_labels;
  j["mode"] = c.mode == Mode::kOnline ? "online" : "offline";
  j["seeds"] = c.seeds;
  j["label_proportion"] = c.label_proportion;
  j["pi_eps"] = c.pi_eps;
  j["pi_minpts"] = c.pi_minpts;
  j["max_steps"] = c.max_steps;
  j["reward_delta"] = c.reward_delta;
  j["fcn_hidden"] = c.fcn_hidden;
  j["mlp_hidden"] = c.mlp_hidden;
  j["gamma"] = c.gamma;
  j["batch_size"] = c.batch_size;
  j["episodes"] = c.episodes;
  j["max_layers"] = c.resolved_max_layers();
  j["minpts_cap_fraction"] = c.resolved_minpts_cap_fraction();
  j["alloc_eps"] = c.alloc_eps;
  j["alloc_minpts"] = c.alloc_minpts;
  j["num_blocks"] = c.num_blocks;
  j["k_cap"] = c.k_cap;
  j["round_budget"] = c.round_budget;
  j["buffer_capacity"] = c.buffer_capacity;
  j["tau"] = c.tau;
  j["learning_rate"] = c.learning_rate;
  j["policy_delay"] = c.policy_delay;
  j["exploration_start"] = c.exploration_start;
  j["exploration_end"] = c.exploration_end;
  j["uncertainty_scale"] = uncertainty_scale_name(c.uncertainty_scale);
  j["single_agent"] = c.single_agent;
  j["normalize"] = c.normalize;
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

Structure build_structure(const Dataset& data, const RunConfig& config) {
  Structure s;
  if (config.single_agent) {
    std::vector<Index> all(static_cast<std::size_t>(data.size()));
    for (Index i = 0; i < data.size(); ++i) all[static_cast<std::size_t>(i)] = i;
    s.allocation.partitions.push_back(std::move(all));
    return s;
  }
  s.selection = select_k(data.points, config.k_cap);
  auto graph = std::make_shared<const StructuredGraph>(s.selection.graph);
  s.tree = optimize_two_level(graph);
  AllocationConfig alloc;
  alloc.eps = config.alloc_eps;
  alloc.min_pts = config.alloc_minpts;
  alloc.scale = config.uncertainty_scale;
  s.allocation = allocate_agents(*s.tree, s.selection.k, alloc);
  return s;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.variance += (v - s.mean) * (v - s.mean);
  s.variance /= static_cast<double>(values.size());
  return s;
}

namespace {

void check_run_input(const Dataset& raw) {
  if (raw.size() < 2) throw DataError("dataset too small");
  if (!raw.has_labels()) throw DataError("weak supervision requires labels");
}

// Metrics of the merged labeling and of every round's merged best-so-far.
void score_run(SeedRun& run, const Labels& truth, Index n, int budget) {
  run.merged = merge_agent_results(run.agents, n);
  run.nmi = nmi(run.merged.assignment, truth);
  run.ari = ari(run.merged.assignment, truth);
  double best_nmi = 0.0;
  double best_ari = -1.0;
  for (int r = 1; r <= budget; ++r) {
    const auto merged = merged_at_round(run.agents, n, r);
    const double v_nmi = nmi(merged.assignment, truth);
    const double v_ari = ari(merged.assignment, truth);
    best_nmi = std::max(best_nmi, v_nmi);
    best_ari = std::max(best_ari, v_ari);
    run.round_nmi.push_back(v_nmi);
    run.round_ari.push_back(v_ari);
    run.round_nmi_max.push_back(best_nmi);
    run.round_ari_max.push_back(best_ari);
  }
}

void finish_report(RunReport& report) {
  std::vector<double> nmis, aris;
  for (const auto& r : report.runs) {
    nmis.push_back(r.nmi);
    aris.push_back(r.ari);
  }
  report.nmi = summarize(nmis);
  report.ari = summarize(aris);
}

}  // namespace

RunReport run_pipeline(const Dataset& raw, const RunConfig& config, bool keep_first_traces) {
  config.validate();
  check_run_input(raw);
  const auto t0 = Clock::now();
  const Dataset data = config.normalize ? normalize(raw) : raw;

  RunReport report;
  report.command = "cluster";
  report.config = config;
  report.points = data.size();
  report.dim = data.dim();
  report.structure = build_structure(data, config);

  SearchConfig search = config.search_config();
  for (std::size_t s = 0; s < config.seeds.size(); ++s) {
    const auto seed_start = Clock::now();
    SeedRun run;
    run.seed = config.seeds[s];
    search.keep_traces = keep_first_traces && s == 0;
    const auto labeled = sample_labeled_subset(data, config.label_proportion, run.seed);
    const auto& parts = report.structure.allocation.partitions;
    for (std::size_t a = 0; a < parts.size(); ++a) {
      run.agents.push_back(
          run_agent(static_cast<int>(a), data, parts[a], labeled.indices, search, run.seed));
    }
    score_run(run, *data.labels, data.size(), config.round_budget);
    run.seconds = seconds_since(seed_start);
    report.runs.push_back(std::move(run));
  }
  finish_report(report);
  report.seconds = seconds_since(t0);
  return report;
}

RunReport run_random_baseline(const Dataset& raw, const RunConfig& config) {
  config.validate();
  check_run_input(raw);
  const auto t0 = Clock::now();
  const Dataset data = config.normalize ? normalize(raw) : raw;

  RunReport report;
  report.command = "baseline";
  report.config = config;
  report.points = data.size();
  report.dim = data.dim();
  std::vector<Index> all(static_cast<std::size_t>(data.size()));
  for (Index i = 0; i < data.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  report.structure.allocation.partitions.push_back(all);

  const SearchLayer zero = layer_zero(data.dim(), data.size(), config.resolved_minpts_cap_fraction(),
                                      config.pi_eps, config.pi_minpts);
  for (std::uint64_t seed : config.seeds) {
    const auto seed_start = Clock::now();
    SeedRun run;
    run.seed = seed;
    const auto labeled = sample_labeled_subset(data, config.label_proportion, seed);
    Labels truth;
    for (Index i : labeled.indices) truth.push_back((*data.labels)[static_cast<std::size_t>(i)]);
    SearchEnv env(data.points, labeled.indices, truth, config.round_budget);

    std::mt19937_64 rng(agent_seed(seed, -1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> minpts(zero.minpts_lo, zero.minpts_hi);
    // Repeated draws are free, so bound the attempts for tiny search spaces.
    const int attempts = 100 * config.round_budget;
    for (int t = 0; t < attempts && env.rounds_used() < config.round_budget; ++t) {
      const double eps = zero.eps_hi - unit(rng) * (zero.eps_hi - zero.eps_lo);  // (lo, hi]
      env.evaluate({eps, minpts(rng)});
    }

    AgentResult agent;
    agent.partition = all;
    record_rounds(env, agent);
    const auto best = std::max_element(agent.round_reward.begin(), agent.round_reward.end());
    agent.best = agent.round_params[static_cast<std::size_t>(best - agent.round_reward.begin())];
    agent.best_reward = *best;
    agent.final_clustering = env.find(agent.best)->clustering;
    run.agents.push_back(std::move(agent));
    score_run(run, *data.labels, data.size(), config.round_budget);
    run.seconds = seconds_since(seed_start);
    report.runs.push_back(std::move(run));
  }
  finish_report(report);
  report.seconds = seconds_since(t0);
  return report;
}

json tree_json(const EncodingTree& tree, Index k) {
  json nodes = json::array();
  for (Index id = 0; id < tree.node_count(); ++id) {
    const auto& n = tree.node(id);
    json node{{"id", id},
              {"parent", n.parent},
              {"vertices", n.vertices},
              {"entropy", tree.node_entropy(id)},
              {"cut", n.cut},
              {"volume", n.volume}};
    if (id != EncodingTree::root() && !tree.is_leaf(id) && k >= 1) {
      node["uncertainty"] = information_uncertainty(tree, id, k);
    }
    nodes.push_back(std::move(node));
  }
  return json{{"entropy", tree.entropy()}, {"height", tree.height()}, {"nodes", std::move(nodes)}};
}

json allocation_json(const Structure& s, const RunConfig& config) {
  json j;
  j["uncertainty_scale"] = uncertainty_scale_name(config.uncertainty_scale);
  j["alloc_eps"] = config.alloc_eps;
  j["alloc_minpts"] = config.alloc_minpts;
  j["k"] = s.selection.k;
  j["stable_points"] = s.selection.stable_points;
  j["normalized_entropy"] = s.selection.normalized_entropy;
  j["agents"] = s.allocation.partitions.size();
  json sizes = json::array();
  for (const auto& p : s.allocation.partitions) sizes.push_back(p.size());
  j["partition_sizes"] = sizes;
  json nodes = json::array();
  for (std::size_t i = 0; i < s.allocation.nodes.size(); ++i) {
    const Index node = s.allocation.nodes[i];
    nodes.push_back({{"node", node},
                     {"size", s.tree ? s.tree->node(node).vertices.size() : 0},
                     {"uncertainty", s.allocation.uncertainty[i]},
                     {"scaled_uncertainty", s.allocation.scaled_uncertainty[i]},
                     {"partition", s.allocation.node_partition[i]}});
  }
  j["intermediate_nodes"] = nodes;
  return j;
}

json trace_json(const EpisodeTrace& trace, int agent) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    steps.push_back({{"step", s.step},
                     {"action", action_name(s.action)},
                     {"eps", s.params.eps},
                     {"min_pts", s.params.min_pts},
                     {"clusters", s.clusters},
                     {"immediate", s.immediate},
                     {"reward", s.reward},
                     {"new_round", s.new_round}});
  }
  return json{{"agent", agent},
              {"layer", trace.layer},
              {"episode", trace.episode},
              {"exploration", trace.exploration},
              {"stop", stop_reason_name(trace.stop)},
              {"steps", std::move(steps)}};
}

json report_json(const RunReport& r) {
  json j;
  j["command"] = r.command;
  j["config"] = config_to_json(r.config);
  j["dataset"] = {{"points", r.points}, {"dim", r.dim}};
  if (r.structure.tree) {
    j["structure"] = allocation_json(r.structure, r.config);
  } else {
    j["structure"] = {{"agents", r.structure.allocation.partitions.size()}};
  }
  std::map<std::string, int> reasons;
  json runs = json::array();
  for (const auto& run : r.runs) {
    json agents = json::array();
    for (const auto& a : run.agents) {
      json layers = json::array();
      for (const auto& l : a.layers) {
        layers.push_back({{"layer", l.layer.index},
                          {"eps_bounds", {l.layer.eps_lo, l.layer.eps_hi}},
                          {"eps_step", l.layer.eps_step},
                          {"minpts_bounds", {l.layer.minpts_lo, l.layer.minpts_hi}},
                          {"minpts_step", l.layer.minpts_step},
                          {"best_eps", l.best.eps},
                          {"best_min_pts", l.best.min_pts},
                          {"best_reward", l.best_reward},
                          {"episodes", l.episodes},
                          {"rounds", l.rounds}});
      }
      for (const auto& [name, count] : a.stop_reasons) reasons[name] += count;
      agents.push_back({{"agent", a.agent},
                        {"size", a.partition.size()},
                        {"eps", a.best.eps},
                        {"min_pts", a.best.min_pts},
                        {"best_reward", a.best_reward},
                        {"clusters", a.final_clustering.num_clusters},
                        {"rounds", a.round_params.size()},
                        {"reward_series", a.series},
                        {"layers", layers},
                        {"stop_reasons", a.stop_reasons}});
    }
    runs.push_back({{"seed", run.seed},
                    {"nmi", run.nmi},
                    {"ari", run.ari},
                    {"clusters", run.merged.num_clusters},
                    {"round_nmi", run.round_nmi},
                    {"round_ari", run.round_ari},
                    {"round_nmi_max", run.round_nmi_max},
                    {"round_ari_max", run.round_ari_max},
                    {"agents", agents},
                    {"seconds", run.seconds}});
  }
  j["runs"] = runs;
  j["summary"] = {{"nmi", {{"mean", r.nmi.mean}, {"variance", r.nmi.variance}}},
                  {"ari", {{"mean", r.ari.mean}, {"variance", r.ari.variance}}},
                  {"seeds", r.runs.size()},
                  {"stop_reasons", reasons}};
  j["seconds"] = r.seconds;
  return j;
}

std::string clusters_svg(const PointsRef& points, const Labels& assignment) {
  constexpr double kSize = 640.0;
  constexpr double kMargin = 20.0;
  const Index n = points.rows();
  const bool two_d = points.cols() >= 2;
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  if (n > 0) {
    x_lo = points.col(0).minCoeff();
    x_hi = points.col(0).maxCoeff();
    if (two_d) {
      y_lo = points.col(1).minCoeff();
      y_hi = points.col(1).maxCoeff();
    }
  }
  auto map = [&](double v, double lo, double hi) {
    return hi > lo ? kMargin + (v - lo) / (hi - lo) * (kSize - 2 * kMargin) : kSize / 2;
  };
  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (Index i = 0; i < n; ++i) {
    const int c = assignment[static_cast<std::size_t>(i)];
    std::string fill = "#bbbbbb";
    if (c != kNoise) {
      const double hue = std::fmod(c * 137.508, 360.0);
      std::ostringstream hsl;
      hsl << "hsl(" << std::lround(hue) << ",70%,45%)";
      fill = hsl.str();
    }
    const double x = map(points(i, 0), x_lo, x_hi);
    const double y = two_d ? kSize - map(points(i, 1), y_lo, y_hi) : kSize / 2;
    svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"2.5\" fill=\"" << fill << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

Dataset load_dataset(const RunConfig& config) {
  if (config.dataset.empty()) throw ConfigError("dataset path is required");
  return load_csv(config.dataset, config.has_labels);
}

namespace {

void write_cluster_outputs(const RunReport& report, const Dataset& raw, const OutputOptions& out) {
  std::filesystem::create_directories(out.out_dir);
  write_text(out.out_dir / "report.json", report_json(report).dump(2) + "\n");
  if (report.runs.empty()) return;
  const auto& first = report.runs.front();
  std::ostringstream csv;
  csv << "point_index,cluster_id\n";
  for (std::size_t i = 0; i < first.merged.assignment.size(); ++i) {
    csv << i << ',' << first.merged.assignment[i] << '\n';
  }
  write_text(out.out_dir / "assignment.csv", csv.str());
  write_text(out.out_dir / "clusters.svg", clusters_svg(raw.points, first.merged.assignment));
  if (out.traces) {
    for (const auto& a : first.agents) {
      int episode = 0;
      for (const auto& t : a.traces) {
        const auto name =
            "trace_" + std::to_string(a.agent) + "_" + std::to_string(episode++) + ".json";
        write_text(out.out_dir / name, trace_json(t, a.agent).dump(2) + "\n");
      }
    }
  }
}

}  // namespace

RunReport cmd_cluster(const RunConfig& config, const OutputOptions& out) {
  config.validate();
  const Dataset raw = load_dataset(config);
  RunReport report = run_pipeline(raw, config, out.traces);
  write_cluster_outputs(report, raw, out);
  return report;
}

json cmd_allocate(const RunConfig& config, const OutputOptions& out) {
  config.validate();
  const Dataset raw = load_dataset(config);
  if (raw.size() < 3) throw DataError("dataset too small");
  const Dataset data = config.normalize ? normalize(raw) : raw;
  RunConfig c = config;
  c.single_agent = false;
  const Structure s = build_structure(data, c);
  json j = allocation_json(s, c);
  j["command"] = "allocate";
  j["dataset"] = {{"points", data.size()}, {"dim", data.dim()}};
  j["tree"] = tree_json(*s.tree, s.selection.k);
  std::filesystem::create_directories(out.out_dir);
  write_text(out.out_dir / "report.json", j.dump(2) + "\n");
  return j;
}

json cmd_online(const RunConfig& config, const OutputOptions& out) {
  RunConfig c = config;
  c.mode = Mode::kOnline;
  c.validate();
  const Dataset raw = load_dataset(c);
  const auto blocks = split_blocks(raw, c.num_blocks);
  json j;
  j["command"] = "online";
  j["config"] = config_to_json(c);
  json reports = json::array();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    RunReport r = run_pipeline(blocks[b], c);
    r.command = "online";
    json rj = report_json(r);
    rj["block"] = b;
    reports.push_back(std::move(rj));
  }
  j["blocks"] = std::move(reports);
  std::filesystem::create_directories(out.out_dir);
  write_text(out.out_dir / "report.json", j.dump(2) + "\n");
  return j;
}

RunReport cmd_baseline_random(const RunConfig& config, const OutputOptions& out) {
  config.validate();
  const Dataset raw = load_dataset(config);
  RunReport report = run_random_baseline(raw, config);
  write_cluster_outputs(report, raw, out);
  return report;
}

}  // namespace ardbscan
