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

#include "acsum/reinforce.hpp"

#include <cmath>
#include <sstream>

#include "acsum/error.hpp"

namespace acsum::model {

Var surrogate_from_log_probs(std::span<const Var> sequence_log_probs, std::span<const double> rewards,
                             double baseline) {
  if (sequence_log_probs.empty()) fail(ErrorKind::kInvalidArgument, "surrogate_loss: no episodes");
  if (sequence_log_probs.size() != rewards.size()) {
    fail(ErrorKind::kInvalidArgument, "surrogate_loss: one reward per episode required");
  }
  std::vector<Var> terms;
  terms.reserve(rewards.size());
  for (std::size_t e = 0; e < rewards.size(); ++e) {
    terms.push_back(ad::scale(sequence_log_probs[e], -(rewards[e] - baseline)));
  }
  return ad::mean(terms);
}

Var surrogate_loss(Graph& g, std::span<const Episode> episodes, const ActorParams& actor,
                   double baseline) {
  if (episodes.empty()) fail(ErrorKind::kInvalidArgument, "surrogate_loss: no episodes");
  std::vector<Var> log_probs;
  std::vector<double> rewards;
  for (const Episode& e : episodes) {
    log_probs.push_back(ad::neg(teacher_forced_nll(g, e.source, e.tokens, actor)));
    rewards.push_back(e.reward);
  }
  return surrogate_from_log_probs(log_probs, rewards, baseline);
}

std::vector<Episode> collect_episodes(std::span<const corpus::TokenSequence> sources,
                                      const ActorParams& actor, const CriticParams& critic,
                                      std::size_t max_len, Rng& rng) {
  std::vector<Episode> out;
  out.reserve(sources.size());
  for (const corpus::TokenSequence& src : sources) {
    Sample s = sample_sequence(src, actor, max_len, rng);
    Episode e;
    e.source = src;
    e.tokens = std::move(s.tokens);
    e.log_probs = std::move(s.log_probs);
    e.reward = discriminator_score(e.source, e.tokens, actor, critic).value();
    out.push_back(std::move(e));
  }
  return out;
}

PolicyUpdate critic2_actor_update(ParameterStore& store, const ActorParams& actor,
                                  const CriticParams& critic,
                                  std::span<const corpus::TokenSequence> sources,
                                  std::size_t max_len, Rng& rng,
                                  const train::OptimizerConfig& opt, double lr, double baseline) {
  std::vector<Episode> episodes = collect_episodes(sources, actor, critic, max_len, rng);
  PolicyUpdate out;
  for (const Episode& e : episodes) out.mean_reward += e.reward;
  out.mean_reward /= static_cast<double>(episodes.size());

  store.zero_gradients(kActorPrefix);
  Graph g;
  Var loss = surrogate_loss(g, episodes, actor, baseline);
  out.surrogate = loss.item();
  if (!std::isfinite(out.surrogate)) {
    std::ostringstream msg;
    msg << "critic2_actor_update: non-finite surrogate loss (mean reward " << out.mean_reward
        << ", " << episodes.size() << " episodes)";
    fail(ErrorKind::kNumerical, msg.str());
  }
  g.backward(loss);
  train::apply_update(store.group(kActorPrefix), opt, lr);
  return out;
}

}  // namespace acsum::model
