#include "ardbscan/search_env.hpp"

#include "ardbscan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ardbscan {

std::string_view action_name(Action a) {
  switch (a) {
    case Action::kLeft: return "left";
    case Action::kRight: return "right";
    case Action::kDown: return "down";
    case Action::kUp: return "up";
    case Action::kStop: return "stop";
  }
  return "?";
}

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::kNone: return "none";
    case StopReason::kBounds: return "bounds";
    case StopReason::kTimeout: return "timeout";
    case StopReason::kAction: return "action";
    case StopReason::kBudget: return "budget";
  }
  return "?";
}

Move apply_action(const DbscanParams& params, Action action, const SearchLayer& layer) {
  Move m{params, {}};
  switch (action) {
    case Action::kLeft: m.params.eps -= layer.eps_step; break;
    case Action::kRight: m.params.eps += layer.eps_step; break;
    case Action::kDown: m.params.min_pts -= layer.minpts_step; break;
    case Action::kUp: m.params.min_pts += layer.minpts_step; break;
    case Action::kStop: break;
  }
  if (m.params.eps < layer.eps_lo) {
    m.params.eps = layer.eps_lo;
    m.flags.eps_lo = true;
  } else if (m.params.eps > layer.eps_hi) {
    m.params.eps = layer.eps_hi;
    m.flags.eps_hi = true;
  }
  if (m.params.min_pts < layer.minpts_lo) {
    m.params.min_pts = layer.minpts_lo;
    m.flags.minpts_lo = true;
  } else if (m.params.min_pts > layer.minpts_hi) {
    m.params.min_pts = layer.minpts_hi;
    m.flags.minpts_hi = true;
  }
  return m;
}

std::array<double, 4> boundary_distances(const DbscanParams& params, const SearchLayer& layer,
                                         const BoundaryFlags& flags) {
  return {flags.eps_lo ? -1.0 : params.eps - layer.eps_lo,
          flags.eps_hi ? -1.0 : layer.eps_hi - params.eps,
          flags.minpts_lo ? -1.0 : static_cast<double>(params.min_pts - layer.minpts_lo),
          flags.minpts_hi ? -1.0 : static_cast<double>(layer.minpts_hi - params.min_pts)};
}

Observation build_observation(const PointsRef& points, const DbscanParams& params,
                              const SearchLayer& layer, const BoundaryFlags& flags,
                              const ClusterResult& clustering) {
  const Index d = points.cols();
  const double size = static_cast<double>(points.rows());
  const double root_d = std::sqrt(static_cast<double>(d));
  const auto dist = boundary_distances(params, layer, flags);
  auto scaled = [](double v, bool flagged, double unit) { return flagged ? -1.0 : v / unit; };

  Observation obs;
  obs.global.resize(7);
  obs.global << params.eps / root_d, params.min_pts / size,
      scaled(dist[0], flags.eps_lo, root_d), scaled(dist[1], flags.eps_hi, root_d),
      scaled(dist[2], flags.minpts_lo, size), scaled(dist[3], flags.minpts_hi, size),
      clustering.num_clusters / size;

  const auto centers = cluster_centers(points, clustering);
  obs.local.resize(d + 2, static_cast<Index>(centers.size()));
  for (std::size_t c = 0; c < centers.size(); ++c) {
    auto col = obs.local.col(static_cast<Index>(c));
    col.head(d) = centers[c].center;
    col[d] = centers[c].center_distance / root_d;
    col[d + 1] = static_cast<double>(centers[c].size) / size;
  }
  return obs;
}

double immediate_reward(const ClusterResult& clustering, std::span<const Index> indices,
                        std::span<const int> truth) {
  if (indices.empty()) throw ConfigError("immediate reward needs a non-empty labeled subset");
  if (indices.size() != truth.size()) throw ConfigError("labeled indices and labels differ in length");
  Labels pred;
  pred.reserve(indices.size());
  for (Index i : indices) pred.push_back(clustering.assignment.at(static_cast<std::size_t>(i)));
  return nmi(pred, truth);
}

std::vector<double> episode_rewards(std::span<const double> immediate, double delta) {
  if (immediate.empty()) throw ConfigError("episode rewards need at least one step");
  std::vector<double> out(immediate.size());
  const double last = immediate.back();
  double future_max = last;
  for (std::size_t i = immediate.size(); i-- > 0;) {
    future_max = std::max(future_max, immediate[i]);
    out[i] = (1.0 - delta) * future_max + delta * last;
  }
  return out;
}

StopReason check_termination(std::span<const double> boundary, int step, Action action,
                             int max_steps) {
  if (std::any_of(boundary.begin(), boundary.end(), [](double v) { return v < 0.0; })) {
    return StopReason::kBounds;
  }
  if (action == Action::kStop && step >= 2) return StopReason::kAction;
  if (step >= max_steps) return StopReason::kTimeout;
  return StopReason::kNone;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw ConfigError("replay buffer index out of range");
  return items_[(head_ + i) % items_.size()];
}

Eigen::VectorXd one_hot(int action) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kActionCount);
  v[action] = 1.0;
  return v;
}

namespace {

constexpr Index kGlobalDim = 7;

void copy_params(nn::Mlp<double>& to, nn::Mlp<double>& from) {
  nn::soft_update(nn::parameters(to), nn::parameters(from), 1.0);
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

int argmax(const Eigen::VectorXd& v) {
  Index best = 0;
  v.maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace

Td3Agent::Td3Agent(Index local_dim, const Td3Config& config, Rng& rng)
    : encoder(kGlobalDim, local_dim, config.encoder_hidden),
      actor(2 * config.encoder_hidden, config.mlp_hidden, kActionCount),
      critic1(2 * config.encoder_hidden + kActionCount, config.mlp_hidden, 1),
      critic2(2 * config.encoder_hidden + kActionCount, config.mlp_hidden, 1),
      target_actor(actor),
      target_critic1(critic1),
      target_critic2(critic2),
      config_(config) {
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  if (config.policy_delay < 1) throw ConfigError("policy delay must be at least 1");
  encoder.init_uniform(rng);
  actor.init_uniform(rng);
  critic1.init_uniform(rng);
  critic2.init_uniform(rng);
  copy_params(target_actor, actor);
  copy_params(target_critic1, critic1);
  copy_params(target_critic2, critic2);
  actor_opt_ = nn::Adam<double>(nn::parameters(actor), config.learning_rate);
  auto critic_blocks = nn::parameters(critic1);
  critic2.collect(critic_blocks);
  encoder.collect(critic_blocks);
  critic_opt_ = nn::Adam<double>(std::move(critic_blocks), config.learning_rate);
}

Eigen::VectorXd Td3Agent::encode(const Observation& obs) const {
  return encoder.forward(obs.global, obs.local);
}

Eigen::VectorXd Td3Agent::logits(const Observation& obs) const { return actor.forward(encode(obs)); }

Action Td3Agent::greedy_action(const Observation& obs) const {
  return static_cast<Action>(argmax(logits(obs)));
}

std::pair<double, double> Td3Agent::q_values(const Eigen::VectorXd& fused,
                                             const Eigen::VectorXd& action) const {
  const Eigen::MatrixXd x = stack(fused, action);
  return {critic1.forward(x)(0, 0), critic2.forward(x)(0, 0)};
}

std::optional<Td3Losses> Td3Agent::update(const ReplayBuffer& buffer, Rng& rng) {
  const std::size_t m = config_.batch_size;
  if (buffer.size() < m) return std::nullopt;
  const Index h2 = encoder.out_dim();
  const auto batch = static_cast<Index>(m);

  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  std::vector<const Transition*> sample(m);
  for (auto& t : sample) t = &buffer.at(pick(rng));

  encoder.zero_grad();
  critic1.zero_grad();
  critic2.zero_grad();

  std::vector<nn::StateEncoder<double>::Cache> caches(m);
  Eigen::MatrixXd states(h2, batch), next_states(h2, batch), actions(kActionCount, batch);
  Eigen::RowVectorXd rewards(batch);
  for (Index j = 0; j < batch; ++j) {
    const auto& t = *sample[static_cast<std::size_t>(j)];
    states.col(j) = encoder.forward(t.state.global, t.state.local, caches[static_cast<std::size_t>(j)]);
    next_states.col(j) = encoder.forward(t.next.global, t.next.local);
    actions.col(j) = one_hot(t.action);
    rewards[j] = t.reward;
  }

  // Target actions: argmax of smoothed target-actor logits.
  Eigen::MatrixXd next_logits = target_actor.forward(next_states);
  std::normal_distribution<double> noise(0.0, config_.target_noise);
  Eigen::MatrixXd next_actions = Eigen::MatrixXd::Zero(kActionCount, batch);
  for (Index j = 0; j < batch; ++j) {
    for (Index a = 0; a < kActionCount; ++a) {
      next_logits(a, j) += std::clamp(noise(rng), -config_.target_noise_clip, config_.target_noise_clip);
    }
    next_actions(argmax(next_logits.col(j)), j) = 1.0;
  }
  const Eigen::MatrixXd next_input = stack(next_states, next_actions);
  const Eigen::RowVectorXd target =
      rewards + config_.gamma * target_critic1.forward(next_input)
                                    .cwiseMin(target_critic2.forward(next_input))
                                    .row(0);

  const Eigen::MatrixXd input = stack(states, actions);
  nn::Mlp<double>::Cache c1, c2;
  const Eigen::RowVectorXd err1 = critic1.forward(input, c1).row(0) - target;
  const Eigen::RowVectorXd err2 = critic2.forward(input, c2).row(0) - target;
  Td3Losses losses;
  losses.critic = err1.squaredNorm() + err2.squaredNorm();
  const Eigen::MatrixXd d_in = critic1.backward(c1, 2.0 * err1) + critic2.backward(c2, 2.0 * err2);
  for (Index j = 0; j < batch; ++j) {
    encoder.backward(caches[static_cast<std::size_t>(j)], d_in.col(j).head(h2));
  }
  critic_opt_.step();
  ++updates_;

  if (updates_ % config_.policy_delay == 0) {
    actor.zero_grad();
    Eigen::MatrixXd fused(h2, batch);
    for (Index j = 0; j < batch; ++j) {
      const auto& t = *sample[static_cast<std::size_t>(j)];
      fused.col(j) = encoder.forward(t.state.global, t.state.local);
    }
    nn::Mlp<double>::Cache ca, cq;
    const Eigen::MatrixXd logit = actor.forward(fused, ca);
    const Eigen::MatrixXd probs = nn::softmax(logit);
    const Eigen::MatrixXd q = critic1.forward(stack(fused, probs), cq);
    losses.actor = -q.mean();
    const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, batch, -1.0 / static_cast<double>(batch));
    const Eigen::MatrixXd dx = critic1.backward(cq, dq);
    const Eigen::MatrixXd dp = dx.bottomRows(kActionCount);
    Eigen::MatrixXd dlogit(kActionCount, batch);
    for (Index j = 0; j < batch; ++j) {
      const double inner = probs.col(j).dot(dp.col(j));
      dlogit.col(j) = probs.col(j).cwiseProduct(dp.col(j) - Eigen::VectorXd::Constant(kActionCount, inner));
    }
    actor.backward(ca, dlogit);
    actor_opt_.step();
    nn::soft_update(nn::parameters(target_actor), nn::parameters(actor), config_.tau);
    nn::soft_update(nn::parameters(target_critic1), nn::parameters(critic1), config_.tau);
    nn::soft_update(nn::parameters(target_critic2), nn::parameters(critic2), config_.tau);
    losses.actor_updated = true;
  }
  return losses;
}

SearchEnv::SearchEnv(PointMatrix points, std::vector<Index> labeled, Labels truth, int round_budget)
    : points_(std::move(points)),
      labeled_(std::move(labeled)),
      truth_(std::move(truth)),
      budget_(round_budget),
      limit_(round_budget) {
  if (points_.rows() < 1) throw DataError("search needs a non-empty partition");
  if (round_budget < 1) throw ConfigError("round budget must be positive");
  if (labeled_.size() != truth_.size()) throw ConfigError("labeled indices and labels differ in length");
  for (Index i : labeled_) {
    if (i < 0 || i >= points_.rows()) throw ConfigError("labeled index outside the partition");
  }
}

bool SearchEnv::is_cached(const DbscanParams& params) const {
  return cache_.count({params.eps, params.min_pts}) > 0;
}

const Evaluation* SearchEnv::find(const DbscanParams& params) const {
  auto it = cache_.find({params.eps, params.min_pts});
  return it == cache_.end() ? nullptr : &it->second;
}

bool SearchEnv::can_evaluate(const DbscanParams& params) const {
  return is_cached(params) || rounds_used() < limit_;
}

const Evaluation& SearchEnv::evaluate(const DbscanParams& params) {
  const auto key = std::make_pair(params.eps, params.min_pts);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  if (rounds_used() >= limit_) throw Error("clustering round limit reached");
  Evaluation ev;
  ev.clustering = run_dbscan(points_, params);
  ev.reward = labeled_.empty() ? 0.0 : immediate_reward(ev.clustering, labeled_, truth_);
  history_.push_back(params);
  ev.round = rounds_used();
  return cache_.emplace(key, std::move(ev)).first->second;
}

EpisodeTrace run_episode(SearchEnv& env, Td3Agent& agent, ReplayBuffer& buffer,
                         const SearchLayer& layer, const EpisodeConfig& config,
                         std::mt19937_64& rng) {
  EpisodeTrace trace;
  trace.layer = layer.index;
  trace.exploration = config.exploration;

  DbscanParams params = layer.start;
  Observation obs = build_observation(env.points(), params, layer, {}, env.evaluate(params).clustering);

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> any_action(0, kActionCount - 1);
  std::vector<Transition> pending;
  std::vector<double> immediate;

  for (int step = 1;; ++step) {
    const Action action = coin(rng) < config.exploration ? static_cast<Action>(any_action(rng))
                                                         : agent.greedy_action(obs);
    const Move move = apply_action(params, action, layer);
    if (!env.can_evaluate(move.params)) {
      trace.stop = StopReason::kBudget;
      break;
    }
    const bool fresh = !env.is_cached(move.params);
    const Evaluation& ev = env.evaluate(move.params);
    Observation next = build_observation(env.points(), move.params, layer, move.flags, ev.clustering);

    StepRecord rec;
    rec.step = step;
    rec.action = action;
    rec.params = move.params;
    rec.clusters = ev.clustering.num_clusters;
    rec.immediate = ev.reward;
    rec.new_round = fresh;
    trace.steps.push_back(rec);
    immediate.push_back(ev.reward);
    pending.push_back({obs, static_cast<int>(action), next, 0.0});

    agent.update(buffer, rng);

    const auto dist = boundary_distances(move.params, layer, move.flags);
    const StopReason reason = check_termination(dist, step, action, config.max_steps);
    if (reason != StopReason::kNone) {
      trace.stop = reason;
      break;
    }
    obs = std::move(next);
    params = move.params;
  }

  if (!immediate.empty()) {
    const auto rewards = episode_rewards(immediate, config.reward_delta);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      pending[i].reward = rewards[i];
      trace.steps[i].reward = rewards[i];
      buffer.push(std::move(pending[i]));
    }
  }
  return trace;
}

}  // namespace ardbscan
