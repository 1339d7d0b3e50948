#include "ardbscan/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace {

using nlohmann::json;

const char* const kKeys[] = {
    "dataset",       "has_labels",        "mode",          "seeds",
    "label_proportion", "pi_eps",         "pi_minpts",     "max_steps",
    "reward_delta",  "fcn_hidden",        "mlp_hidden",    "gamma",
    "batch_size",    "episodes",          "max_layers",    "minpts_cap_fraction",
    "alloc_eps",     "alloc_minpts",      "num_blocks",    "k_cap",
    "round_budget",  "buffer_capacity",   "tau",           "learning_rate",
    "policy_delay",  "exploration_start", "exploration_end", "uncertainty_scale",
    "single_agent",  "normalize",
};

// Flag text to a JSON value: numbers, booleans and arrays parse as JSON,
// comma lists become arrays, anything else stays a string.
json flag_value(const std::string& key, const std::string& text) {
  if (key == "seeds" && text.find('[') == std::string::npos) {
    json list = json::array();
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      try {
        list.push_back(json::parse(item));
      } catch (const json::parse_error&) {
        throw ardbscan::ConfigError("seeds must be integers");
      }
    }
    return list;
  }
  if (key == "dataset" || key == "mode" || key == "uncertainty_scale") return text;
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool trace = false;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config_path, "JSON config file");
  cmd->add_option("--seed", opt.seed, "Run a single seed");
  cmd->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
  cmd->add_flag("--trace", opt.trace, "Write per-episode traces for the first seed");
  for (const char* key : kKeys) {
    cmd->add_option_function<std::string>(
        std::string("--") + key, [&opt, key](const std::string& v) { opt.overrides[key] = v; },
        "Override config key");
  }
}

ardbscan::RunConfig resolve(const Options& opt) {
  json j = json::object();
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw ardbscan::ConfigError("cannot open config " + opt.config_path);
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw ardbscan::ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ardbscan::ConfigError("config must be a JSON object");
  }
  for (const auto& [key, text] : opt.overrides) j[key] = flag_value(key, text);
  if (opt.seed) j["seeds"] = json::array({*opt.seed});
  return ardbscan::config_from_json(j);
}

void print_summary(const ardbscan::RunReport& r) {
  std::cout << r.command << ": " << r.points << " points, "
            << r.structure.allocation.partitions.size() << " agent(s), " << r.runs.size()
            << " seed(s)\n"
            << "NMI " << r.nmi.mean << " (var " << r.nmi.variance << "), ARI " << r.ari.mean
            << " (var " << r.ari.variance << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive multi-agent DBSCAN parameter search"};
  app.require_subcommand(1);
  Options opt;
  auto* cluster = app.add_subcommand("cluster", "Full offline pipeline");
  auto* allocate = app.add_subcommand("allocate", "Structural partition and agent allocation only");
  auto* online = app.add_subcommand("online", "Block-wise pipeline, re-initialized per block");
  auto* baseline = app.add_subcommand("baseline", "Uniform random parameter search");
  for (auto* cmd : {cluster, allocate, online, baseline}) add_common(cmd, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto config = resolve(opt);
    const ardbscan::OutputOptions out{opt.out_dir, opt.trace};
    if (cluster->parsed()) {
      print_summary(ardbscan::cmd_cluster(config, out));
    } else if (baseline->parsed()) {
      print_summary(ardbscan::cmd_baseline_random(config, out));
    } else if (allocate->parsed()) {
      const auto j = ardbscan::cmd_allocate(config, out);
      std::cout << "k " << j["k"] << ", " << j["agents"] << " agent(s)\n";
    } else if (online->parsed()) {
      const auto j = ardbscan::cmd_online(config, out);
      for (const auto& b : j["blocks"]) {
        std::cout << "block " << b["block"] << ": NMI " << b["summary"]["nmi"]["mean"] << ", ARI "
                  << b["summary"]["ari"]["mean"] << "\n";
      }
    }
  } catch (const ardbscan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ardbscan::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
