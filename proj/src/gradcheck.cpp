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

#include "acsum/gradcheck.hpp"

#include <algorithm>
#include <numeric>

#include "acsum/error.hpp"
#include "acsum/reinforce.hpp"
#include "json.hpp"

namespace acsum::train {

bool GradientReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const GradientCheck& c) { return c.passed(); });
}

std::string GradientReport::to_json(int indent) const {
  nlohmann::json report{{"tolerance", tolerance}, {"seed", seed}, {"checks", nlohmann::json::array()}};
  for (const GradientCheck& c : checks) {
    report["checks"].push_back({{"name", c.name},
                                {"max_relative_error", c.max_relative_error},
                                {"passed", c.passed()},
                                {"offenders", c.offenders},
                                {"parameters", c.parameters}});
  }
  report["passed"] = passed();
  return report.dump(indent);
}

GradientReport check_gradients(const TrainConfig& config, std::uint64_t seed, double tolerance) {
  if (!(tolerance > 0.0)) fail(ErrorKind::kInvalidArgument, "gradcheck: tolerance must be positive");
  TrainConfig cfg = config;
  cfg.hidden_dim = std::min<std::size_t>(cfg.hidden_dim, 5);
  cfg.embed_dim = std::min<std::size_t>(cfg.embed_dim, 4);
  cfg.vocab_size = std::min<std::size_t>(cfg.vocab_size, 12);
  cfg.init_scale = 1.0;

  corpus::SyntheticOptions so;
  so.min_len = 2;
  so.max_len = 3;
  so.alphabet = 6;
  so.valid_fraction = 0.0;
  const auto synth = corpus::gen_synthetic(corpus::SyntheticTask::kReverse, 3, seed, so);
  const auto vocab = corpus::Vocabulary::build(synth.train, cfg.vocab_size);
  const auto pairs = corpus::encode_pairs(synth.train, vocab, {6, 4});
  model::Model m(dims_for(cfg, vocab.size()));
  m.initialize(derive_seed(seed, 1), cfg.init_scale);
  Rng rng(derive_seed(seed, 2));

  const auto& actor = m.actor();
  const auto& critic = m.critic();
  std::vector<std::size_t> all(pairs.size());
  std::iota(all.begin(), all.end(), 0);
  const auto batch = corpus::make_batch(pairs, all);

  std::vector<corpus::TokenSequence> sources;
  for (const auto& p : pairs) sources.push_back(p.source);
  const auto episodes = model::collect_episodes(sources, actor, critic, 3, rng);
  std::vector<corpus::SummaryPair> negatives;
  for (const auto& e : episodes) negatives.push_back({e.source, e.tokens});

  const auto actor_params = m.store().group(model::kActorPrefix);
  const auto critic_params = m.store().group(model::kCriticPrefix);

  struct Objective {
    const char* name;
    ad::LossFn loss;
    std::vector<ad::Parameter*> params;
  };
  const std::vector<Objective> objectives = {
      {"actor_nll", [&](ad::Graph& g) { return model::batch_nll(g, batch, actor); }, actor_params},
      {"critic_cross_entropy",
       [&](ad::Graph& g) { return model::discriminator_loss(g, pairs, negatives, actor, critic); },
       critic_params},
      {"reinforce_surrogate",
       [&](ad::Graph& g) { return model::surrogate_loss(g, episodes, actor, cfg.reinforce_baseline); },
       actor_params},
  };

  GradientReport report;
  report.tolerance = tolerance;
  report.seed = seed;
  for (const Objective& s : objectives) {
    GradientCheck c;
    c.name = s.name;
    c.parameters = ad::grad_check_parameters(s.loss, s.params);
    for (const auto& [name, err] : c.parameters) {
      c.max_relative_error = std::max(c.max_relative_error, err);
      if (!(err < tolerance)) c.offenders.push_back(name);
    }
    report.checks.push_back(std::move(c));
  }
  return report;
}

}  // namespace acsum::train
