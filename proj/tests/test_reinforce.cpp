// Copyright 2026 The acsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <vector>

#include "acsum/error.hpp"
#include "acsum/reinforce.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace acsum;
using namespace acsum::model;
using corpus::kEos;

namespace {

struct Fixture {
  ParameterStore store;
  ActorParams actor;
  CriticParams critic;
  Fixture(Dims dims, std::uint64_t seed, double scale)
      : actor(ActorParams::create(store, dims)), critic(CriticParams::create(store, dims)) {
    Rng rng(seed);
    store.initialize_uniform(rng, scale);
  }
};

constexpr std::size_t kVocab = 5;
constexpr std::size_t kMaxLen = 2;
const std::vector<TokenId> kSource = {3, 4};

double reward_of(const Fixture& f, const std::vector<TokenId>& y) {
  return discriminator_score(kSource, y, f.actor, f.critic).value();
}

// E[R] over every possible output, with rewards held fixed at their current
// values.
double expected_reward(const Fixture& f, const std::vector<std::vector<TokenId>>& outputs,
                       const std::vector<double>& rewards) {
  double total = 0.0;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    total += std::exp(sequence_log_prob(kSource, outputs[k], f.actor)) * rewards[k];
  }
  return total;
}

std::vector<std::vector<TokenId>> outputs() {
  std::vector<std::vector<TokenId>> out;
  for (const auto& s : oracle::all_outputs(static_cast<int>(kVocab), kEos, kMaxLen)) {
    out.emplace_back(s.begin(), s.end());
  }
  return out;
}

}  // namespace

TEST_CASE("surrogate value is the reward-weighted mean negative log-probability") {
  Graph g;
  const Var lp[] = {g.input(ad::Array::scalar(-1.0)), g.input(ad::Array::scalar(-3.0))};
  const std::vector<double> rewards = {0.9, 0.2};
  CHECK(surrogate_from_log_probs(lp, rewards).item() == doctest::Approx((0.9 * 1 + 0.2 * 3) / 2));
  CHECK(surrogate_from_log_probs(lp, rewards, 0.5).item() ==
        doctest::Approx((0.4 * 1 + -0.3 * 3) / 2));
  CHECK_THROWS_AS(surrogate_from_log_probs(std::span<const Var>{}, {}), Error);
  CHECK_THROWS_AS(surrogate_from_log_probs(lp, std::vector<double>{1.0}), Error);
}

TEST_CASE("enumerated expected surrogate gradient equals minus the gradient of E[R]") {
  Fixture f({kVocab, 3, 3}, 41, 1.0);
  const auto ys = outputs();
  REQUIRE(ys.size() == 21);
  std::vector<double> rewards;
  double mass = 0.0;
  for (const auto& y : ys) {
    rewards.push_back(reward_of(f, y));
    mass += std::exp(sequence_log_prob(kSource, y, f.actor));
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

  for (double baseline : {0.0, 0.4}) {
    for (ad::Parameter* p : f.store.group(kActorPrefix)) {
      CAPTURE(p->name);
      CAPTURE(baseline);
      // Expected analytic gradient: sum_y p(y) * grad L_y.
      std::vector<double> expected(p->value.size(), 0.0);
      for (std::size_t k = 0; k < ys.size(); ++k) {
        f.store.zero_gradients();
        Graph g;
        const Var lp[] = {ad::neg(teacher_forced_nll(g, kSource, ys[k], f.actor))};
        const double r[] = {rewards[k]};
        g.backward(surrogate_from_log_probs(lp, r, baseline));
        const double prob = std::exp(sequence_log_prob(kSource, ys[k], f.actor));
        for (std::size_t i = 0; i < expected.size(); ++i) expected[i] += prob * p->grad[i];
      }
      const auto numeric = oracle::numeric_gradient(
          [&](const std::vector<double>& v) {
            const auto saved = p->value.data;
            p->value.data = v;
            const double out = expected_reward(f, ys, rewards);
            p->value.data = saved;
            return out;
          },
          p->value.data, 1e-5);
      for (std::size_t i = 0; i < numeric.size(); ++i) {
        CHECK(std::abs(expected[i] + numeric[i]) <= 1e-7 * std::max(1.0, std::abs(numeric[i])));
      }
    }
  }
}

TEST_CASE("sampled surrogate gradients average to the exact gradient") {
  Fixture f({kVocab, 3, 3}, 43, 1.0);
  const auto ys = outputs();
  std::vector<double> rewards;
  for (const auto& y : ys) rewards.push_back(reward_of(f, y));
  ad::Parameter& p = *f.actor.out_bias;
  const auto exact = oracle::numeric_gradient(
      [&](const std::vector<double>& v) {
        const auto saved = p.value.data;
        p.value.data = v;
        const double out = expected_reward(f, ys, rewards);
        p.value.data = saved;
        return out;
      },
      p.value.data, 1e-5);

  const std::size_t n = 20000;
  std::vector<corpus::TokenSequence> sources(n, kSource);
  Rng rng(7);
  const auto episodes = collect_episodes(sources, f.actor, f.critic, kMaxLen, rng);
  std::vector<double> sum(p.value.size(), 0.0), sq(p.value.size(), 0.0);
  for (const Episode& e : episodes) {
    f.store.zero_gradients();
    Graph g;
    const Episode one[] = {e};
    g.backward(surrogate_loss(g, one, f.actor));
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += p.grad[i];
      sq[i] += p.grad[i] * p.grad[i];
    }
  }
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double mean = sum[i] / n;
    const double se = std::sqrt((sq[i] / n - mean * mean) / n);
    CAPTURE(i);
    CHECK(std::abs(mean + exact[i]) < 5.0 * se + 1e-9);
  }
}

TEST_CASE("episodes carry sampling log-probabilities and discriminator rewards") {
  Fixture f({8, 3, 4}, 44, 0.5);
  std::vector<corpus::TokenSequence> sources = {{4, 5}, {6}};
  Rng rng(3);
  const auto eps = collect_episodes(sources, f.actor, f.critic, 4, rng);
  REQUIRE(eps.size() == 2);
  for (const Episode& e : eps) {
    double total = 0.0;
    for (double lp : e.log_probs) total += lp;
    CHECK(total == doctest::Approx(sequence_log_prob(e.source, e.tokens, f.actor)));
    CHECK(e.reward == discriminator_score(e.source, e.tokens, f.actor, f.critic).value());
  }
}

TEST_CASE("the policy update moves only the actor") {
  Fixture f({8, 3, 4}, 45, 0.5);
  const auto critic_before = f.critic.out_weight->value;
  const auto actor_before = f.actor.out_weight->value;
  std::vector<corpus::TokenSequence> sources = {{4, 5}, {6, 7, 4}};
  Rng rng(4);
  const PolicyUpdate u = critic2_actor_update(f.store, f.actor, f.critic, sources, 4, rng, {}, 1.0);
  CHECK(u.mean_reward > 0.0);
  CHECK(u.mean_reward < 1.0);
  CHECK(std::isfinite(u.surrogate));
  CHECK(f.critic.out_weight->value == critic_before);
  CHECK_FALSE(f.actor.out_weight->value == actor_before);
}
