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

#include "acsum/critics.hpp"

#include <cmath>

#include "acsum/error.hpp"

namespace acsum::model {

CriticParams CriticParams::create(ParameterStore& store, const Dims& dims) {
  const std::size_t ky = dims.vocab, kw = dims.embed, kh = dims.hidden;
  const std::string pre = kCriticPrefix;
  CriticParams c;
  c.dims = dims;
  c.embed = &store.add(pre + "embed", {ky, kw});
  c.forward = GruParams::create(store, pre + "forward.", kw, kh);
  c.backward = GruParams::create(store, pre + "backward.", kw, kh);
  c.source_weight = &store.add(pre + "source_weight", {kh, 2 * kh});
  c.summary_weight = &store.add(pre + "summary_weight", {kh, 2 * kh});
  c.combine_bias = &store.add(pre + "combine_bias", {kh});
  c.out_weight = &store.add(pre + "out_weight", {2, kh});
  c.out_bias = &store.add(pre + "out_bias", {2});
  return c;
}

namespace {

ad::Array source_summary_state(std::span<const TokenId> source, const ActorParams& actor) {
  Graph frozen(false);
  EncoderStates enc = encode(frozen, source, actor);
  const Var halves[] = {enc.forward_final, enc.backward_final};
  return ad::concat(halves).value();
}

Var summary_state(Graph& g, std::span<const TokenId> summary, const CriticParams& c) {
  if (summary.empty()) fail(ErrorKind::kInvalidArgument, "discriminator: empty summary");
  Var table = g.param(*c.embed);
  std::vector<Var> emb;
  emb.reserve(summary.size());
  for (TokenId y : summary) {
    if (y < 0 || static_cast<std::size_t>(y) >= c.dims.vocab) {
      fail(ErrorKind::kInvalidArgument, "discriminator: summary id out of range");
    }
    emb.push_back(ad::lookup(table, static_cast<std::size_t>(y)));
  }
  Var zero = g.constant(ad::Array({c.dims.hidden}));
  Var fwd = zero;
  for (const Var& x : emb) fwd = gru_step(x, fwd, c.forward);
  Var bwd = zero;
  for (auto it = emb.rbegin(); it != emb.rend(); ++it) bwd = gru_step(*it, bwd, c.backward);
  const Var halves[] = {fwd, bwd};
  return ad::concat(halves);
}

}  // namespace

Var discriminator_probs(Graph& g, std::span<const TokenId> source, std::span<const TokenId> summary,
                        const ActorParams& actor, const CriticParams& c) {
  Var hx = g.constant(source_summary_state(source, actor));
  Var hy = summary_state(g, summary, c);
  Var hc = ad::tanh(ad::matvec(g.param(*c.source_weight), hx) +
                    ad::matvec(g.param(*c.summary_weight), hy) + g.param(*c.combine_bias));
  return ad::softmax(ad::matvec(g.param(*c.out_weight), hc) + g.param(*c.out_bias));
}

Verdict discriminator_score(std::span<const TokenId> source, std::span<const TokenId> summary,
                            const ActorParams& actor, const CriticParams& critic) {
  Graph g(false);
  const ad::Array& v = discriminator_probs(g, source, summary, actor, critic).value();
  return {v[0], v[1]};
}

Var batch_nll(Graph& g, const corpus::PairBatch& batch, const ActorParams& actor) {
  if (batch.size() == 0) fail(ErrorKind::kInvalidArgument, "batch_nll: empty batch");
  std::vector<Var> per_example;
  per_example.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const corpus::SummaryPair row = batch.row(i);
    per_example.push_back(teacher_forced_nll(g, row.source, row.target, actor));
  }
  return ad::mean(per_example);
}

double nll_value(std::span<const TokenId> source, std::span<const TokenId> target,
                 const ActorParams& actor) {
  Graph g(false);
  return teacher_forced_nll(g, source, target, actor).item();
}

Var discriminator_loss(Graph& g, std::span<const corpus::SummaryPair> positives,
                       std::span<const corpus::SummaryPair> negatives, const ActorParams& actor,
                       const CriticParams& critic) {
  if (positives.empty() || negatives.empty()) {
    fail(ErrorKind::kInvalidArgument, "discriminator_loss: both classes must be non-empty");
  }
  auto class_term = [&](std::span<const corpus::SummaryPair> pairs, std::size_t label) {
    std::vector<Var> terms;
    terms.reserve(pairs.size());
    for (const corpus::SummaryPair& p : pairs) {
      Var probs = discriminator_probs(g, p.source, p.target, actor, critic);
      terms.push_back(ad::neg(ad::log(ad::pick(probs, label))));
    }
    return ad::mean(terms);
  };
  return class_term(positives, 0) + class_term(negatives, 1);
}

double critic1_update(ParameterStore& store, const ActorParams& actor, const corpus::PairBatch& batch,
                      const train::OptimizerConfig& opt, double lr) {
  store.zero_gradients(kActorPrefix);
  Graph g;
  Var loss = batch_nll(g, batch, actor);
  const double value = loss.item();
  if (!std::isfinite(value)) fail(ErrorKind::kNumerical, "critic1_update: non-finite NLL");
  g.backward(loss);
  train::apply_update(store.group(kActorPrefix), opt, lr);
  return value;
}

double critic2_update(ParameterStore& store, const ActorParams& actor, const CriticParams& critic,
                      std::span<const corpus::SummaryPair> positives,
                      std::span<const corpus::SummaryPair> negatives,
                      const train::OptimizerConfig& opt, double lr) {
  store.zero_gradients(kCriticPrefix);
  Graph g;
  Var loss = discriminator_loss(g, positives, negatives, actor, critic);
  const double value = loss.item();
  if (!std::isfinite(value)) fail(ErrorKind::kNumerical, "critic2_update: non-finite J(phi)");
  g.backward(loss);
  train::apply_update(store.group(kCriticPrefix), opt, lr);
  return value;
}

}  // namespace acsum::model
