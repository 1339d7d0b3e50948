#pragma once

#include "ardbscan/dbscan.hpp"
#include "ardbscan/nn.hpp"
#include "ardbscan/types.hpp"

#include <array>
#include <cstdint>
#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace ardbscan {

enum class Action { kLeft, kRight, kDown, kUp, kStop };
inline constexpr int kActionCount = 5;

std::string_view action_name(Action a);

/// Bounds, step sizes and start point of one recursive search layer.
struct SearchLayer {
  int index = 0;
  double eps_lo = 0.0;
  double eps_hi = 0.0;
  double eps_step = 0.0;
  int minpts_lo = 1;
  int minpts_hi = 1;
  int minpts_step = 1;
  DbscanParams start;
};

/// Which boundary an action ran into; a set flag shows up as a -1 distance.
struct BoundaryFlags {
  bool eps_lo = false;
  bool eps_hi = false;
  bool minpts_lo = false;
  bool minpts_hi = false;

  bool any() const { return eps_lo || eps_hi || minpts_lo || minpts_hi; }
};

struct Move {
  DbscanParams params;
  BoundaryFlags flags;
};

/// LEFT/RIGHT shift eps by one step, DOWN/UP shift min_pts; results are
/// clamped to the layer bounds and the crossed boundary is flagged.
Move apply_action(const DbscanParams& params, Action action, const SearchLayer& layer);

/// The four raw boundary distances (eps low/high, min_pts low/high), with -1
/// in place of a flagged one.
std::array<double, 4> boundary_distances(const DbscanParams& params, const SearchLayer& layer,
                                         const BoundaryFlags& flags);

/// Network inputs for one state: a 7-vector describing the parameters and
/// one (d+2)-column per non-noise cluster.
struct Observation {
  Eigen::VectorXd global;
  Eigen::MatrixXd local;
};

Observation build_observation(const PointsRef& points, const DbscanParams& params,
                              const SearchLayer& layer, const BoundaryFlags& flags,
                              const ClusterResult& clustering);

/// NMI between the predicted labels on `indices` and `truth`.
double immediate_reward(const ClusterResult& clustering, std::span<const Index> indices,
                        std::span<const int> truth);

/// r_i = (1 - delta) * max(immediate[i..]) + delta * immediate.back().
std::vector<double> episode_rewards(std::span<const double> immediate, double delta);

enum class StopReason { kNone, kBounds, kTimeout, kAction, kBudget };

std::string_view stop_reason_name(StopReason r);

/// Stops on a negative boundary distance, at step >= max_steps, or on STOP
/// from the second step on. Steps count from 1.
StopReason check_termination(std::span<const double> boundary, int step, Action action,
                             int max_steps);

struct Transition {
  Observation state;
  int action = 0;
  Observation next;
  double reward = 0.0;
};

/// FIFO buffer; the oldest transition is dropped at capacity.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  /// i-th oldest transition.
  const Transition& at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest item once full
  std::vector<Transition> items_;
};

struct Td3Config {
  Index encoder_hidden = 32;
  Index mlp_hidden = 256;
  double gamma = 0.1;
  std::size_t batch_size = 16;
  double tau = 0.005;
  double learning_rate = 1e-3;
  int policy_delay = 2;
  double target_noise = 0.2;
  double target_noise_clip = 0.5;
  std::size_t buffer_capacity = 2000;
};

struct Td3Losses {
  double critic = 0.0;
  double actor = 0.0;
  bool actor_updated = false;
};

/// Encoder, actor, twin critics and their target copies for one agent.
///
/// The actor maps a fused state to 5 logits and the executed action is their
/// argmax. Critics read the fused state followed by a 5-wide action vector:
/// a one-hot for stored actions, the softmax of the logits for the actor's
/// own objective.
class Td3Agent {
 public:
  using Rng = std::mt19937_64;

  Td3Agent(Index local_dim, const Td3Config& config, Rng& rng);
  Td3Agent(const Td3Agent&) = delete;
  Td3Agent& operator=(const Td3Agent&) = delete;

  Eigen::VectorXd encode(const Observation& obs) const;
  Eigen::VectorXd logits(const Observation& obs) const;
  Action greedy_action(const Observation& obs) const;
  /// Twin critic values for a fused state and action vector.
  std::pair<double, double> q_values(const Eigen::VectorXd& fused,
                                     const Eigen::VectorXd& action) const;

  /// One TD3 step on a batch sampled from `buffer`; a no-op returning nullopt
  /// while the buffer holds fewer than batch_size transitions.
  std::optional<Td3Losses> update(const ReplayBuffer& buffer, Rng& rng);

  const Td3Config& config() const noexcept { return config_; }
  int updates() const noexcept { return updates_; }

  nn::StateEncoder<double> encoder;
  nn::Mlp<double> actor, critic1, critic2;
  nn::Mlp<double> target_actor, target_critic1, target_critic2;

 private:
  Td3Config config_;
  nn::Adam<double> actor_opt_;
  nn::Adam<double> critic_opt_;  // both critics and the encoder
  int updates_ = 0;
};

Eigen::VectorXd one_hot(int action);

/// One clustering of the partition and its reward.
struct Evaluation {
  ClusterResult clustering;
  double reward = 0.0;
  int round = 0;  // 1-based round in which it was computed
};

/// Clustering environment for one partition. Every distinct parameter pair
/// costs one clustering round the first time it is evaluated; later visits
/// reuse the cached result.
class SearchEnv {
 public:
  /// `labeled` are row indices into `points` with `truth` aligned to them.
  SearchEnv(PointMatrix points, std::vector<Index> labeled, Labels truth, int round_budget);

  const PointMatrix& points() const noexcept { return points_; }
  bool has_labels() const noexcept { return !labeled_.empty(); }

  bool is_cached(const DbscanParams& params) const;
  /// Cached evaluation or nullptr.
  const Evaluation* find(const DbscanParams& params) const;
  bool can_evaluate(const DbscanParams& params) const;
  /// Throws Error when the round limit is reached and the pair is new.
  const Evaluation& evaluate(const DbscanParams& params);

  int rounds_used() const noexcept { return static_cast<int>(history_.size()); }
  int round_budget() const noexcept { return budget_; }
  /// Rounds may be capped below the budget, e.g. per layer.
  void set_round_limit(int limit) { limit_ = std::min(limit, budget_); }
  int round_limit() const noexcept { return limit_; }

  /// Parameter pairs in the order they were first evaluated.
  const std::vector<DbscanParams>& history() const noexcept { return history_; }

 private:
  PointMatrix points_;
  std::vector<Index> labeled_;
  Labels truth_;
  int budget_;
  int limit_;
  std::map<std::pair<double, int>, Evaluation> cache_;
  std::vector<DbscanParams> history_;
};

struct StepRecord {
  int step = 0;
  Action action = Action::kStop;
  DbscanParams params;
  int clusters = 0;
  double immediate = 0.0;
  double reward = 0.0;
  bool new_round = false;
};

struct EpisodeTrace {
  int layer = 0;
  int episode = 0;
  double exploration = 0.0;
  std::vector<StepRecord> steps;
  StopReason stop = StopReason::kNone;
};

struct EpisodeConfig {
  int max_steps = 30;
  double reward_delta = 0.2;
  double exploration = 0.1;  // probability of a uniformly random action
};

/// Runs one episode from the layer's start, appends its transitions to the
/// buffer when it ends, and trains the agent after every step once the buffer
/// holds a full batch. The start parameters must already be evaluable.
EpisodeTrace run_episode(SearchEnv& env, Td3Agent& agent, ReplayBuffer& buffer,
                         const SearchLayer& layer, const EpisodeConfig& config,
                         std::mt19937_64& rng);

}  // namespace ardbscan
