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

// Critic I scores the actor by teacher-forced negative log-likelihood.
// Critic II is a binary discriminator over (source, summary) pairs whose
// positive-class probability serves as a sequence-level quality value.

#ifndef ACSUM_CRITICS_HPP_
#define ACSUM_CRITICS_HPP_

#include <span>

#include "acsum/actor.hpp"
#include "acsum/corpus.hpp"
#include "acsum/optimizer.hpp"

namespace acsum::model {

inline constexpr const char* kCriticPrefix = "critic.";

struct CriticParams {
  Dims dims;
  Parameter* embed = nullptr;           // k_y x k_w
  GruParams forward;                    // k_w -> k_h
  GruParams backward;                   // k_w -> k_h
  Parameter* source_weight = nullptr;   // W^c_xh, k_h x 2k_h
  Parameter* summary_weight = nullptr;  // W^c_yh, k_h x 2k_h
  Parameter* combine_bias = nullptr;    // b^c, k_h
  Parameter* out_weight = nullptr;      // W^c_hv, 2 x k_h
  Parameter* out_bias = nullptr;        // b^v, 2

  static CriticParams create(ParameterStore& store, const Dims& dims);
};

// Both sides of a scored pair; summary is Y or a sampled Y-hat.
struct ScoredPair {
  std::span<const TokenId> source;
  std::span<const TokenId> summary;
};

// v^c = softmax(W^c_hv tanh(W^c_xh h^x + W^c_yh h^y + b^c) + b^v).
// h^x is taken from the actor encoder as a constant, so no gradient reaches
// the actor through this path.
Var discriminator_probs(Graph& g, std::span<const TokenId> source,
                        std::span<const TokenId> summary, const ActorParams& actor,
                        const CriticParams& critic);

struct Verdict {
  double positive = 0.5;  // v^c[0] == V_phi
  double negative = 0.5;
  double value() const { return positive; }
};

Verdict discriminator_score(std::span<const TokenId> source, std::span<const TokenId> summary,
                            const ActorParams& actor, const CriticParams& critic);

// Mean over examples of per-example NLL sums.
Var batch_nll(Graph& g, const corpus::PairBatch& batch, const ActorParams& actor);
double nll_value(std::span<const TokenId> source, std::span<const TokenId> target,
                 const ActorParams& actor);

// J(phi) = mean over positives of -log v^c[0] + mean over negatives of
// -log v^c[1].
Var discriminator_loss(Graph& g, std::span<const corpus::SummaryPair> positives,
                       std::span<const corpus::SummaryPair> negatives, const ActorParams& actor,
                       const CriticParams& critic);

// Zeroes actor gradients, backpropagates the batch NLL and steps the actor.
// Returns the pre-step batch NLL.
double critic1_update(ParameterStore& store, const ActorParams& actor,
                      const corpus::PairBatch& batch, const train::OptimizerConfig& opt,
                      double lr);

// Zeroes critic gradients, backpropagates J(phi) and steps the critic only.
// Returns the pre-step J(phi).
double critic2_update(ParameterStore& store, const ActorParams& actor, const CriticParams& critic,
                      std::span<const corpus::SummaryPair> positives,
                      std::span<const corpus::SummaryPair> negatives,
                      const train::OptimizerConfig& opt, double lr);

}  // namespace acsum::model

#endif  // ACSUM_CRITICS_HPP_
