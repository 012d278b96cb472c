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

#include "acsum/actor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acsum/error.hpp"

namespace acsum::model {
namespace {

Var affine(Graph& g, Parameter* w, Var x, Parameter* b) {
  return ad::matvec(g.param(*w), x) + g.param(*b);
}

Var zeros(Graph& g, std::size_t n) { return g.constant(ad::Array({n})); }

void check_dims(const Dims& dims) {
  if (dims.vocab < corpus::kReservedCount || dims.embed == 0 || dims.hidden == 0) {
    fail(ErrorKind::kInvalidArgument, "actor: dims must satisfy k_y >= 4, k_w >= 1, k_h >= 1");
  }
}

}  // namespace

GruParams GruParams::create(ParameterStore& store, const std::string& prefix, std::size_t input,
                            std::size_t hidden) {
  GruParams p;
  p.w_xr = &store.add(prefix + "w_xr", {hidden, input});
  p.w_hr = &store.add(prefix + "w_hr", {hidden, hidden});
  p.b_r = &store.add(prefix + "b_r", {hidden});
  p.w_xz = &store.add(prefix + "w_xz", {hidden, input});
  p.w_hz = &store.add(prefix + "w_hz", {hidden, hidden});
  p.b_z = &store.add(prefix + "b_z", {hidden});
  p.w_xh = &store.add(prefix + "w_xh", {hidden, input});
  p.w_hh = &store.add(prefix + "w_hh", {hidden, hidden});
  p.b_h = &store.add(prefix + "b_h", {hidden});
  return p;
}

Var gru_step(Var x, Var h_prev, const GruParams& p) {
  Graph& g = *x.graph();
  if (x.shape() != ad::Shape{p.input_size()} || h_prev.shape() != ad::Shape{p.hidden_size()}) {
    fail(ErrorKind::kInvalidArgument, "gru_step: expected input " +
                                          ad::shape_string({p.input_size()}) + " and hidden " +
                                          ad::shape_string({p.hidden_size()}) + ", got " +
                                          ad::shape_string(x.shape()) + " and " +
                                          ad::shape_string(h_prev.shape()));
  }
  Var r = ad::sigmoid(ad::matvec(g.param(*p.w_xr), x) + ad::matvec(g.param(*p.w_hr), h_prev) +
                      g.param(*p.b_r));
  Var z = ad::sigmoid(ad::matvec(g.param(*p.w_xz), x) + ad::matvec(g.param(*p.w_hz), h_prev) +
                      g.param(*p.b_z));
  Var cand = ad::tanh(ad::matvec(g.param(*p.w_xh), x) +
                      ad::matvec(g.param(*p.w_hh), r * h_prev) + g.param(*p.b_h));
  return z * h_prev + ad::one_minus(z) * cand;
}

ActorParams ActorParams::create(ParameterStore& store, const Dims& dims) {
  check_dims(dims);
  const std::size_t ky = dims.vocab, kw = dims.embed, kh = dims.hidden;
  const std::string pre = kActorPrefix;
  ActorParams p;
  p.dims = dims;
  p.source_embed = &store.add(pre + "source_embed", {ky, kw});
  p.target_embed = &store.add(pre + "target_embed", {ky, kw});
  p.encoder_forward = GruParams::create(store, pre + "encoder_forward.", kw, kh);
  p.encoder_backward = GruParams::create(store, pre + "encoder_backward.", kw, kh);
  p.decoder_first = GruParams::create(store, pre + "decoder_first.", kw, kh);
  p.decoder_second = GruParams::create(store, pre + "decoder_second.", kw + 2 * kh, kh);
  p.attn_query = &store.add(pre + "attn_query", {kh, kh});
  p.attn_key = &store.add(pre + "attn_key", {kh, 2 * kh});
  p.attn_bias = &store.add(pre + "attn_bias", {kh});
  p.attn_score = &store.add(pre + "attn_score", {kh});
  p.init_weight = &store.add(pre + "init_weight", {kh, 2 * kh});
  p.init_bias = &store.add(pre + "init_bias", {kh});
  p.out_weight = &store.add(pre + "out_weight", {ky, kh});
  p.out_bias = &store.add(pre + "out_bias", {ky});
  return p;
}

EncoderStates encode(Graph& g, std::span<const TokenId> source, const ActorParams& p,
                     std::span<const std::uint8_t> mask) {
  const std::size_t m = source.size();
  if (!mask.empty() && mask.size() != m) {
    fail(ErrorKind::kInvalidArgument, "encode: mask length does not match source length");
  }
  EncoderStates enc;
  enc.mask.assign(m, 1);
  if (!mask.empty()) std::transform(mask.begin(), mask.end(), enc.mask.begin(), [](auto v) { return v ? 1 : 0; });
  std::vector<std::size_t> live;
  for (std::size_t t = 0; t < m; ++t) {
    if (enc.mask[t]) live.push_back(t);
  }
  if (live.empty()) fail(ErrorKind::kInvalidArgument, "encode: empty source sequence");
  for (std::size_t t : live) {
    if (source[t] < 0 || static_cast<std::size_t>(source[t]) >= p.dims.vocab) {
      fail(ErrorKind::kInvalidArgument, "encode: token id out of range: " + std::to_string(source[t]));
    }
  }

  const std::size_t kh = p.dims.hidden;
  Var table = g.param(*p.source_embed);
  std::vector<Var> embedded(m);
  for (std::size_t t : live) embedded[t] = ad::lookup(table, static_cast<std::size_t>(source[t]));

  Var zero = zeros(g, kh);
  enc.forward.assign(m, zero);
  enc.backward.assign(m, zero);
  Var h = zero;
  for (std::size_t t : live) {
    h = gru_step(embedded[t], h, p.encoder_forward);
    enc.forward[t] = h;
  }
  h = zero;
  for (auto it = live.rbegin(); it != live.rend(); ++it) {
    h = gru_step(embedded[*it], h, p.encoder_backward);
    enc.backward[*it] = h;
  }
  enc.states.reserve(m);
  for (std::size_t t = 0; t < m; ++t) {
    const Var halves[] = {enc.forward[t], enc.backward[t]};
    enc.states.push_back(ad::concat(halves));
  }
  enc.matrix = ad::stack_rows(enc.states);
  enc.keys = ad::matmul_nt(enc.matrix, g.param(*p.attn_key));
  enc.forward_final = enc.forward[live.back()];
  enc.backward_final = enc.backward[live.front()];
  return enc;
}

DecoderState init_decoder(Graph& g, const EncoderStates& enc, const ActorParams& p) {
  std::vector<Var> live;
  for (std::size_t t = 0; t < enc.length(); ++t) {
    if (enc.mask[t]) live.push_back(enc.states[t]);
  }
  Var avg = ad::mean(live);
  Var init = ad::tanh(affine(g, p.init_weight, avg, p.init_bias));
  DecoderState s;
  s.first = init;
  s.second = init;
  return s;
}

AttentionResult attention(Var query, const EncoderStates& enc, const ActorParams& p) {
  Graph& g = *query.graph();
  Var q = affine(g, p.attn_query, query, p.attn_bias);
  Var hidden = ad::tanh(ad::add_row_broadcast(enc.keys, q));
  Var energies = ad::matvec(hidden, g.param(*p.attn_score));
  AttentionResult out;
  out.weights = ad::masked_softmax(energies, enc.mask);
  out.context = ad::matvec_t(enc.matrix, out.weights);
  return out;
}

StepResult decode_step(Graph& g, TokenId previous, const DecoderState& state,
                       const EncoderStates& enc, const ActorParams& p) {
  if (previous < 0 || static_cast<std::size_t>(previous) >= p.dims.vocab) {
    fail(ErrorKind::kInvalidArgument, "decode_step: token id out of range: " + std::to_string(previous));
  }
  Var emb = ad::lookup(g.param(*p.target_embed), static_cast<std::size_t>(previous));
  StepResult out;
  out.state.first = gru_step(emb, state.first, p.decoder_first);
  AttentionResult attn = attention(out.state.first, enc, p);
  const Var parts[] = {emb, attn.context};
  out.state.second = gru_step(ad::concat(parts), state.second, p.decoder_second);
  out.state.weights = attn.weights;
  out.state.context = attn.context;
  out.logits = affine(g, p.out_weight, out.state.second, p.out_bias);
  return out;
}

Var teacher_forced_nll(Graph& g, std::span<const TokenId> source, std::span<const TokenId> target,
                       const ActorParams& p) {
  if (target.empty()) fail(ErrorKind::kInvalidArgument, "teacher_forced_nll: empty target");
  EncoderStates enc = encode(g, source, p);
  DecoderState state = init_decoder(g, enc, p);
  TokenId previous = corpus::kBos;
  std::vector<Var> terms;
  terms.reserve(target.size());
  for (TokenId y : target) {
    if (y < 0 || static_cast<std::size_t>(y) >= p.dims.vocab) {
      fail(ErrorKind::kInvalidArgument, "teacher_forced_nll: target id out of range");
    }
    StepResult step = decode_step(g, previous, state, enc, p);
    terms.push_back(ad::pick(ad::log_softmax(step.logits), static_cast<std::size_t>(y)));
    state = step.state;
    previous = y;
  }
  Var total = ad::sum(ad::concat(terms));
  return ad::neg(total);
}

double sequence_log_prob(std::span<const TokenId> source, std::span<const TokenId> sequence,
                         const ActorParams& p) {
  if (sequence.empty()) return 0.0;
  Graph g(false);
  return -teacher_forced_nll(g, source, sequence, p).item();
}

namespace {

std::vector<double> log_probs_of(const StepResult& step) {
  return ad::log_softmax(step.logits).value().data;
}

}  // namespace

Sample sample_sequence(std::span<const TokenId> source, const ActorParams& p, std::size_t max_len,
                       Rng& rng) {
  if (max_len == 0) fail(ErrorKind::kInvalidArgument, "sample_sequence: max_len must be at least 1");
  Graph g(false);
  EncoderStates enc = encode(g, source, p);
  DecoderState state = init_decoder(g, enc, p);
  Sample out;
  TokenId previous = corpus::kBos;
  for (std::size_t t = 0; t < max_len; ++t) {
    StepResult step = decode_step(g, previous, state, enc, p);
    std::vector<double> lp = log_probs_of(step);
    std::vector<double> probs(lp.size());
    std::transform(lp.begin(), lp.end(), probs.begin(), [](double v) { return std::exp(v); });
    const auto k = static_cast<TokenId>(rng.categorical(probs));
    out.tokens.push_back(k);
    out.log_probs.push_back(lp[static_cast<std::size_t>(k)]);
    if (k == corpus::kEos) break;
    state = step.state;
    previous = k;
  }
  return out;
}

std::vector<TokenId> greedy_decode(std::span<const TokenId> source, const ActorParams& p,
                                   std::size_t max_len) {
  Graph g(false);
  EncoderStates enc = encode(g, source, p);
  DecoderState state = init_decoder(g, enc, p);
  std::vector<TokenId> out;
  TokenId previous = corpus::kBos;
  for (std::size_t t = 0; t < max_len; ++t) {
    StepResult step = decode_step(g, previous, state, enc, p);
    const auto& logits = step.logits.value().data;
    const auto k = static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    out.push_back(k);
    if (k == corpus::kEos) break;
    state = step.state;
    previous = k;
  }
  return out;
}

Hypothesis beam_search(std::span<const TokenId> source, const ActorParams& p,
                       const BeamOptions& options) {
  if (options.beam_size == 0) fail(ErrorKind::kInvalidArgument, "beam_search: beam_size must be at least 1");
  struct Open {
    std::vector<TokenId> tokens;
    double log_prob = 0.0;
    DecoderState state;
  };
  struct Candidate {
    std::size_t parent;
    TokenId token;
    double log_prob;
  };

  Graph g(false);
  EncoderStates enc = encode(g, source, p);
  std::vector<Open> live{{{}, 0.0, init_decoder(g, enc, p)}};
  std::vector<Hypothesis> pool;

  auto score = [&](const Hypothesis& h) {
    return options.length_normalize && !h.tokens.empty()
               ? h.log_prob / static_cast<double>(h.tokens.size())
               : h.log_prob;
  };

  for (std::size_t t = 0; t < options.max_len && !live.empty(); ++t) {
    std::vector<Candidate> candidates;
    std::vector<DecoderState> next_states;
    next_states.reserve(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      const Open& h = live[i];
      const TokenId previous = h.tokens.empty() ? corpus::kBos : h.tokens.back();
      StepResult step = decode_step(g, previous, h.state, enc, p);
      const std::vector<double> lp = log_probs_of(step);
      for (std::size_t k = 0; k < lp.size(); ++k) {
        candidates.push_back({i, static_cast<TokenId>(k), h.log_prob + lp[k]});
      }
      next_states.push_back(step.state);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.log_prob > b.log_prob; });
    candidates.resize(std::min(candidates.size(), options.beam_size));

    std::vector<Open> next;
    for (const Candidate& c : candidates) {
      std::vector<TokenId> tokens = live[c.parent].tokens;
      tokens.push_back(c.token);
      if (c.token == corpus::kEos) {
        pool.push_back({std::move(tokens), c.log_prob, true});
      } else {
        next.push_back({std::move(tokens), c.log_prob, next_states[c.parent]});
      }
    }
    live = std::move(next);
    if (pool.size() >= options.beam_size) {
      live.clear();
      break;
    }
  }
  for (Open& h : live) pool.push_back({std::move(h.tokens), h.log_prob, false});

  const Hypothesis* best = nullptr;
  for (const Hypothesis& h : pool) {
    if (best == nullptr || score(h) > score(*best)) best = &h;
  }
  return best ? *best : Hypothesis{};
}

std::vector<TokenId> strip_eos(std::span<const TokenId> tokens) {
  std::vector<TokenId> out(tokens.begin(), tokens.end());
  if (!out.empty() && out.back() == corpus::kEos) out.pop_back();
  return out;
}

}  // namespace acsum::model
