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

// Likelihood-ratio policy gradient with the discriminator's positive-class
// probability as an episode-level reward.

#ifndef ACSUM_REINFORCE_HPP_
#define ACSUM_REINFORCE_HPP_

#include <span>
#include <vector>

#include "acsum/actor.hpp"
#include "acsum/critics.hpp"
#include "acsum/optimizer.hpp"
#include "acsum/random.hpp"

namespace acsum::model {

struct Episode {
  std::vector<TokenId> source;
  std::vector<TokenId> tokens;     // sampled Y-hat, EOS included when drawn
  std::vector<double> log_probs;   // per sampled token, at sampling time
  double reward = 0.0;             // V_phi(Y-hat, X), a constant
};

// L = mean_e [ (R_e - baseline) * sum_t -log p_e,t ], where each entry of
// sequence_log_probs is sum_t log p_e,t as a graph scalar. Descending L
// ascends the expected reward.
Var surrogate_from_log_probs(std::span<const Var> sequence_log_probs,
                             std::span<const double> rewards, double baseline = 0.0);

// Re-scores each episode's tokens under the current actor with teacher
// forcing and forms the surrogate above.
Var surrogate_loss(Graph& g, std::span<const Episode> episodes, const ActorParams& actor,
                   double baseline = 0.0);

// One sampled episode per source, rewarded by the discriminator.
std::vector<Episode> collect_episodes(std::span<const corpus::TokenSequence> sources,
                                      const ActorParams& actor, const CriticParams& critic,
                                      std::size_t max_len, Rng& rng);

struct PolicyUpdate {
  double mean_reward = 0.0;
  double surrogate = 0.0;  // pre-step L
};

// Samples, scores, and takes one optimizer step on the actor.
PolicyUpdate critic2_actor_update(ParameterStore& store, const ActorParams& actor,
                                  const CriticParams& critic,
                                  std::span<const corpus::TokenSequence> sources,
                                  std::size_t max_len, Rng& rng,
                                  const train::OptimizerConfig& opt, double lr,
                                  double baseline = 0.0);

}  // namespace acsum::model

#endif  // ACSUM_REINFORCE_HPP_
