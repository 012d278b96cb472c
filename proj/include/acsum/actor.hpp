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

// The policy network: bidirectional GRU encoder, two-layer GRU decoder with
// additive attention between the layers, and the generation procedures.

#ifndef ACSUM_ACTOR_HPP_
#define ACSUM_ACTOR_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acsum/autodiff.hpp"
#include "acsum/corpus.hpp"
#include "acsum/random.hpp"

namespace acsum::model {

using ad::Graph;
using ad::Parameter;
using ad::ParameterStore;
using ad::Var;
using corpus::TokenId;

struct Dims {
  std::size_t vocab = 0;   // k_y
  std::size_t embed = 0;   // k_w
  std::size_t hidden = 0;  // k_h
};

// One GRU cell: reset gate r, update gate z, candidate g.
struct GruParams {
  Parameter* w_xr = nullptr;
  Parameter* w_hr = nullptr;
  Parameter* b_r = nullptr;
  Parameter* w_xz = nullptr;
  Parameter* w_hz = nullptr;
  Parameter* b_z = nullptr;
  Parameter* w_xh = nullptr;
  Parameter* w_hh = nullptr;
  Parameter* b_h = nullptr;

  static GruParams create(ParameterStore& store, const std::string& prefix,
                          std::size_t input, std::size_t hidden);
  std::size_t input_size() const { return w_xr->value.cols(); }
  std::size_t hidden_size() const { return w_hr->value.rows(); }
};

// h_t = z * h_prev + (1 - z) * g
Var gru_step(Var x, Var h_prev, const GruParams& p);

struct ActorParams {
  Dims dims;
  Parameter* source_embed = nullptr;  // k_y x k_w
  Parameter* target_embed = nullptr;  // k_y x k_w
  GruParams encoder_forward;          // k_w -> k_h
  GruParams encoder_backward;         // k_w -> k_h
  GruParams decoder_first;            // k_w -> k_h
  GruParams decoder_second;           // (k_w + 2k_h) -> k_h
  Parameter* attn_query = nullptr;    // W^d_hh, k_h x k_h
  Parameter* attn_key = nullptr;      // W^e_hh, k_h x 2k_h
  Parameter* attn_bias = nullptr;     // k_h
  Parameter* attn_score = nullptr;    // v, k_h
  Parameter* init_weight = nullptr;   // k_h x 2k_h
  Parameter* init_bias = nullptr;     // k_h
  Parameter* out_weight = nullptr;    // k_y x k_h
  Parameter* out_bias = nullptr;      // k_y

  // Registers every actor entry under the "actor." prefix.
  static ActorParams create(ParameterStore& store, const Dims& dims);
};

inline constexpr const char* kActorPrefix = "actor.";

struct EncoderStates {
  std::vector<Var> forward;   // per position, k_h; zero at masked positions
  std::vector<Var> backward;  // per position, k_h
  std::vector<Var> states;    // h^e_t = forward || backward, 2k_h
  Var matrix;                 // m x 2k_h, rows are states
  Var keys;                   // m x k_h, W^e_hh applied to each state
  Var forward_final;          // forward state at the last live position
  Var backward_final;         // backward state at the first live position
  std::vector<std::uint8_t> mask;

  std::size_t length() const { return states.size(); }
};

// An empty mask means every position is live. Throws on an empty source.
EncoderStates encode(Graph& g, std::span<const TokenId> source, const ActorParams& p,
                     std::span<const std::uint8_t> mask = {});

struct DecoderState {
  Var first;    // h^{d1}
  Var second;   // h^{d2}
  Var weights;  // last attention weights; invalid before the first step
  Var context;  // last context vector
};

// Both layers start from tanh(W_init * mean(live h^e) + b_init).
DecoderState init_decoder(Graph& g, const EncoderStates& enc, const ActorParams& p);

struct AttentionResult {
  Var weights;  // length m, zero on masked positions
  Var context;  // 2k_h
};

AttentionResult attention(Var query, const EncoderStates& enc, const ActorParams& p);

struct StepResult {
  Var logits;  // pre-softmax scores, k_y
  DecoderState state;
};

StepResult decode_step(Graph& g, TokenId previous, const DecoderState& state,
                       const EncoderStates& enc, const ActorParams& p);

// Sum over target positions of -log p(y_t | y_<t, X), teacher-forced from BOS.
Var teacher_forced_nll(Graph& g, std::span<const TokenId> source,
                       std::span<const TokenId> target, const ActorParams& p);

// log p(sequence | source); sequence need not end in EOS.
double sequence_log_prob(std::span<const TokenId> source, std::span<const TokenId> sequence,
                         const ActorParams& p);

struct Sample {
  std::vector<TokenId> tokens;     // includes EOS when it was drawn
  std::vector<double> log_probs;   // one per emitted token
};

Sample sample_sequence(std::span<const TokenId> source, const ActorParams& p,
                       std::size_t max_len, Rng& rng);

std::vector<TokenId> greedy_decode(std::span<const TokenId> source, const ActorParams& p,
                                   std::size_t max_len);

struct BeamOptions {
  std::size_t beam_size = 10;
  std::size_t max_len = 50;
  bool length_normalize = false;
};

struct Hypothesis {
  std::vector<TokenId> tokens;  // includes the final EOS when finished
  double log_prob = 0.0;
  bool finished = false;
};

// Plain beam search over cumulative log-probability. Hypotheses that emit EOS
// move to a finished pool; the search stops when the pool holds beam_size
// entries or max_len steps have been taken. Hypotheses still open at max_len
// compete with the finished ones.
Hypothesis beam_search(std::span<const TokenId> source, const ActorParams& p,
                       const BeamOptions& options);

// Tokens without the trailing EOS.
std::vector<TokenId> strip_eos(std::span<const TokenId> tokens);

}  // namespace acsum::model

#endif  // ACSUM_ACTOR_HPP_
