#include "ardbscan/recursive_search.hpp"

#include "../support/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ardbscan;

namespace {

SearchConfig small_config() {
  SearchConfig c;
  c.td3.mlp_hidden = 32;
  c.td3.encoder_hidden = 8;
  c.episodes = 4;
  return c;
}

Dataset blob_data() {
  std::mt19937_64 rng(14);
  return normalize(synthetic::three_blobs(rng, 25));
}

std::vector<Index> iota(Index n, Index from = 0) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = from + i;
  return v;
}

}  // namespace

TEST_CASE("layer zero bounds") {
  const auto z = layer_zero(2, 788, 0.25, 5.0, 4);
  CHECK(z.eps_lo == 0.0);
  CHECK(z.eps_hi == doctest::Approx(1.41421).epsilon(1e-5));
  CHECK(z.minpts_hi == 197);
  CHECK(z.minpts_step == 49);
  CHECK(z.eps_step == doctest::Approx(std::sqrt(2.0) / 5));
  CHECK(z.start.eps == doctest::Approx(std::sqrt(2.0) / 2));
  CHECK(z.start.min_pts == 99);
  CHECK(layer_zero(2, 3, 0.25, 5.0, 4).minpts_hi == 1);
  CHECK(layer_zero(2, 3, 0.25, 5.0, 4).minpts_step == 1);
  CHECK_THROWS_AS(layer_zero(0, 3, 0.25, 5.0, 4), ConfigError);
  CHECK(round_half_up(2.5) == 3);
  CHECK(round_half_up(2.49) == 2);
}

TEST_CASE("step sequences shrink by pi") {
  const auto z = layer_zero(2, 164, 0.25, 5.0, 4);
  REQUIRE(z.minpts_hi == 41);
  CHECK(z.minpts_step == 10);
  const auto l1 = next_layer(z, z, z.start, 5.0, 4);
  const auto l2 = next_layer(l1, z, z.start, 5.0, 4);
  CHECK(l1.eps_step == doctest::Approx(std::sqrt(2.0) / 25).epsilon(1e-12));
  CHECK(l2.eps_step == doctest::Approx(std::sqrt(2.0) / 125).epsilon(1e-12));
  CHECK(l1.minpts_step == 3);
  CHECK(l2.minpts_step == 1);
  CHECK(next_layer(l2, z, z.start, 5.0, 4).minpts_step == 1);
  CHECK(l1.index == 1);
  CHECK(l1.start.eps == z.start.eps);
  CHECK(l1.eps_lo == doctest::Approx(z.start.eps - 2.5 * l1.eps_step));
  CHECK(l1.minpts_lo == round_half_up(z.start.min_pts - 6.0));
}

TEST_CASE("bounds clip at layer zero") {
  const auto z = layer_zero(2, 164, 0.25, 5.0, 4);
  const auto l1 = next_layer(z, z, {z.eps_hi - 0.01, z.minpts_hi}, 5.0, 4);
  CHECK(l1.eps_hi == z.eps_hi);
  CHECK(l1.minpts_hi == z.minpts_hi);
  const auto low = next_layer(z, z, {0.0, 1}, 5.0, 4);
  CHECK(low.eps_lo == 0.0);
  CHECK(low.minpts_lo == 1);
}

TEST_CASE("layers nest inside layer zero") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 10), size(1, 5000), pi_mp(1, 8);
  for (int t = 0; t < 1000; ++t) {
    const double pi_eps = 1.0 + 9.0 * u(rng);
    const int pi_minpts = pi_mp(rng);
    const auto z = layer_zero(dim(rng), size(rng), 0.25, pi_eps, pi_minpts);
    SearchLayer l = z;
    for (int depth = 0; depth < 4; ++depth) {
      const DbscanParams best{l.eps_lo + u(rng) * (l.eps_hi - l.eps_lo),
                              l.minpts_lo + static_cast<int>(u(rng) * (l.minpts_hi - l.minpts_lo + 1) * 0.999)};
      const auto next = next_layer(l, z, best, pi_eps, pi_minpts);
      CHECK(next.eps_lo >= z.eps_lo);
      CHECK(next.eps_hi <= z.eps_hi);
      CHECK(next.minpts_lo >= z.minpts_lo);
      CHECK(next.minpts_hi <= z.minpts_hi);
      CHECK(next.eps_step <= l.eps_step);
      CHECK(next.minpts_step <= l.minpts_step);
      CHECK(next.minpts_step >= 1);
      CHECK(next.eps_lo <= best.eps);
      CHECK(best.eps <= next.eps_hi);
      l = next;
    }
  }
}

TEST_CASE("agent search is reproducible and bounded") {
  const auto data = blob_data();
  const auto part = iota(data.size());
  const std::vector<Index> labeled{0, 5, 10, 30, 35, 40, 55, 60, 70};
  const auto config = small_config();
  const auto a = run_agent(0, data, part, labeled, config, 7);
  const auto b = run_agent(0, data, part, labeled, config, 7);
  CHECK(a.best.eps == b.best.eps);
  CHECK(a.best.min_pts == b.best.min_pts);
  CHECK(a.series == b.series);
  CHECK(a.final_clustering.assignment == b.final_clustering.assignment);

  CHECK(a.round_params.size() <= 30);
  CHECK(a.layers.size() == 3);
  for (std::size_t i = 1; i < a.series.size(); ++i) CHECK(a.series[i] >= a.series[i - 1]);
  CHECK(a.best_reward >= a.round_reward.front());
  const auto z = layer_zero(2, data.size(), 0.25, 5.0, 4);
  for (const auto& p : a.round_params) {
    CHECK(p.eps >= z.eps_lo);
    CHECK(p.eps <= z.eps_hi);
    CHECK(p.min_pts >= z.minpts_lo);
    CHECK(p.min_pts <= z.minpts_hi);
  }
  int rounds = 0;
  for (const auto& l : a.layers) rounds += l.rounds;
  CHECK(rounds == static_cast<int>(a.round_params.size()));
}

TEST_CASE("agent without labeled points keeps the start") {
  const auto data = blob_data();
  const auto part = iota(10);
  const std::vector<Index> labeled{40, 50};
  const auto r = run_agent(1, data, part, labeled, small_config(), 3);
  const auto z = layer_zero(2, 10, 0.25, 5.0, 4);
  CHECK(r.best.eps == z.start.eps);
  CHECK(r.best.min_pts == z.start.min_pts);
  CHECK(r.best_reward == 0.0);
  CHECK(r.round_params.size() == 1);
}

TEST_CASE("single-point partition") {
  const auto data = blob_data();
  const std::vector<Index> part{3};
  const std::vector<Index> labeled{3};
  const auto r = run_agent(0, data, part, labeled, small_config(), 1);
  CHECK(r.final_clustering.assignment.size() == 1);
  CHECK(r.best.min_pts == 1);
}

TEST_CASE("agent argument checks") {
  const auto data = blob_data();
  const std::vector<Index> none;
  CHECK_THROWS_AS(run_agent(0, data, none, none, small_config(), 1), ConfigError);
  const std::vector<Index> twice{1, 1};
  CHECK_THROWS_AS(run_agent(0, data, twice, none, small_config(), 1), ConfigError);
}

TEST_CASE("merging offsets cluster ids") {
  const std::vector<std::vector<Index>> parts{{0, 2, 4}, {1, 3, 5, 6}};
  const Labels a{0, 1, 1};
  const Labels b{2, kNoise, 0, 1};
  const std::vector<const Labels*> labels{&a, &b};
  const auto m = merge_assignments(7, parts, labels);
  CHECK(m.num_clusters == 5);
  CHECK(m.assignment == Labels{0, 4, 1, kNoise, 1, 2, 3});

  const Labels noise{kNoise, kNoise, kNoise};
  const std::vector<const Labels*> with_noise{&noise, &b};
  const auto n = merge_assignments(7, parts, with_noise);
  CHECK(n.num_clusters == 3);
  CHECK(n.assignment[0] == kNoise);
  CHECK(n.assignment[1] == 2);

  const std::vector<std::vector<Index>> overlap{{0, 1, 2}, {2, 3, 4, 5}};
  CHECK_THROWS_AS(merge_assignments(6, overlap, labels), ConfigError);
  const std::vector<std::vector<Index>> gap{{0, 2, 4}, {1, 3, 5, 7}};
  CHECK_THROWS_AS(merge_assignments(8, gap, labels), ConfigError);
}

TEST_CASE("short agents repeat their last round") {
  AgentResult a, b;
  a.partition = {0, 1};
  b.partition = {2};
  for (int r = 0; r < 12; ++r) a.round_best.push_back(std::make_shared<const Labels>(Labels{r % 2, 0}));
  for (int r = 0; r < 30; ++r) b.round_best.push_back(std::make_shared<const Labels>(Labels{0}));
  const std::vector<AgentResult> both{a, b};
  const auto at12 = merged_at_round(both, 3, 12);
  for (int r = 13; r <= 30; ++r) CHECK(merged_at_round(both, 3, r).assignment == at12.assignment);
  CHECK_THROWS_AS(merged_at_round(both, 3, 0), ConfigError);
}

TEST_CASE("agent seeds differ per agent") {
  CHECK(agent_seed(1, 0) != agent_seed(1, 1));
  CHECK(agent_seed(1, 0) != agent_seed(2, 0));
  CHECK(agent_seed(5, 3) == agent_seed(5, 3));
}
