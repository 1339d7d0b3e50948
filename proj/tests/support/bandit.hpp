#pragma once

// One-step bandit: every stored action is rewarded 1 when it is RIGHT and 0
// otherwise, from random states with a varying number of clusters.

#include "ardbscan/search_env.hpp"

#include <random>

namespace bandit {

using ardbscan::Action;
using ardbscan::Observation;

inline Observation random_observation(std::mt19937_64& rng, ardbscan::Index local_dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> clusters(0, 4);
  Observation o;
  o.global.resize(7);
  for (auto& v : o.global) v = u(rng);
  o.local.resize(local_dim, clusters(rng));
  for (ardbscan::Index i = 0; i < o.local.size(); ++i) o.local.data()[i] = u(rng);
  return o;
}

struct Result {
  int first_all_right = -1;  // update count at which every state chose RIGHT
  bool right_at_end = false;
};

inline Result run(std::uint64_t seed, int updates = 200, int states = 64) {
  std::mt19937_64 rng(seed);
  ardbscan::Td3Agent agent(4, {}, rng);
  ardbscan::ReplayBuffer buffer(2000);
  for (int i = 0; i < states; ++i) {
    ardbscan::Transition t;
    t.state = random_observation(rng, 4);
    t.next = random_observation(rng, 4);
    t.action = i % ardbscan::kActionCount;
    t.reward = static_cast<Action>(t.action) == Action::kRight ? 1.0 : 0.0;
    buffer.push(std::move(t));
  }
  auto all_right = [&] {
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      if (agent.greedy_action(buffer.at(i).state) != Action::kRight) return false;
    }
    return true;
  };
  Result r;
  for (int u = 1; u <= updates; ++u) {
    agent.update(buffer, rng);
    if (r.first_all_right < 0 && all_right()) r.first_all_right = u;
  }
  r.right_at_end = all_right();
  return r;
}

}  // namespace bandit
