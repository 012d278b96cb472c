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
#include <limits>
#include <vector>

#include "acsum/actor.hpp"
#include "acsum/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace acsum;
using namespace acsum::model;
using corpus::kBos;
using corpus::kEos;

namespace {

struct Fixture {
  ParameterStore store;
  ActorParams actor;
  Fixture(Dims dims, std::uint64_t seed, double scale = 0.5) : actor(ActorParams::create(store, dims)) {
    Rng rng(seed);
    store.initialize_uniform(rng, scale);
  }
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> affine(const ad::Array& w, const std::vector<double>& x) {
  std::vector<double> y(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) y[r] += w.at(r, c) * x[c];
  }
  return y;
}

// GRU cell written out element by element.
std::vector<double> reference_gru(const GruParams& p, const std::vector<double>& x,
                                  const std::vector<double>& h) {
  const auto xr = affine(p.w_xr->value, x), hr = affine(p.w_hr->value, h);
  const auto xz = affine(p.w_xz->value, x), hz = affine(p.w_hz->value, h);
  std::vector<double> r(h.size()), z(h.size()), rh(h.size()), out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    r[i] = sigmoid(xr[i] + hr[i] + p.b_r->value[i]);
    z[i] = sigmoid(xz[i] + hz[i] + p.b_z->value[i]);
    rh[i] = r[i] * h[i];
  }
  const auto xh = affine(p.w_xh->value, x), hh = affine(p.w_hh->value, rh);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double g = std::tanh(xh[i] + hh[i] + p.b_h->value[i]);
    out[i] = z[i] * h[i] + (1.0 - z[i]) * g;
  }
  return out;
}

std::vector<TokenId> random_source(Rng& rng, std::size_t vocab, std::size_t len) {
  std::vector<TokenId> s(len);
  for (auto& t : s) t = static_cast<TokenId>(3 + rng.below(vocab - 3));
  return s;
}

}  // namespace

TEST_CASE("gru_step matches the written-out cell") {
  Fixture f({8, 3, 4}, 2);
  const GruParams& p = f.actor.decoder_first;
  Rng rng(8);
  std::vector<double> x(3), h(4);
  for (double& v : x) v = rng.uniform(-1, 1);
  for (double& v : h) v = rng.uniform(-1, 1);
  Graph g(false);
  const Var out = gru_step(g.input(ad::Array::vector(x)), g.input(ad::Array::vector(h)), p);
  const auto expect = reference_gru(p, x, h);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out.value()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("gru update gate saturated at one keeps the previous state") {
  Fixture f({8, 3, 4}, 2);
  for (double& v : f.actor.decoder_first.b_z->value.data) v = 60.0;
  Graph g(false);
  const auto h = ad::Array::vector({0.1, -0.2, 0.3, -0.4});
  const Var out = gru_step(g.input(ad::Array::vector({1, 2, 3})), g.input(h), f.actor.decoder_first);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out.value()[i] == doctest::Approx(h[i]));
}

TEST_CASE("parameter shapes follow the dimensions") {
  Fixture f({9, 3, 4}, 1);
  CHECK(f.actor.source_embed->value.shape == ad::Shape{9, 3});
  CHECK(f.actor.decoder_second.input_size() == 3 + 8);
  CHECK(f.actor.attn_key->value.shape == ad::Shape{4, 8});
  CHECK(f.actor.init_weight->value.shape == ad::Shape{4, 8});
  CHECK(f.actor.out_weight->value.shape == ad::Shape{9, 4});
  for (auto* p : f.store.group(kActorPrefix)) CHECK(p->name.rfind("actor.", 0) == 0);
}

TEST_CASE("encoder runs both directions and respects the mask") {
  Fixture f({10, 3, 4}, 3);
  const std::vector<TokenId> src = {4, 5, 6};
  Graph g(false);
  const EncoderStates enc = encode(g, src, f.actor);
  REQUIRE(enc.length() == 3);
  CHECK(enc.matrix.shape() == ad::Shape{3, 8});
  CHECK(enc.keys.shape() == ad::Shape{3, 4});

  // Forward state at position 0 depends only on the first token.
  std::vector<double> zero(4, 0.0);
  const auto emb = [&](TokenId t) {
    std::vector<double> e(3);
    for (std::size_t c = 0; c < 3; ++c) e[c] = f.actor.source_embed->value.at(t, c);
    return e;
  };
  const auto h0 = reference_gru(f.actor.encoder_forward, emb(4), zero);
  const auto b2 = reference_gru(f.actor.encoder_backward, emb(6), zero);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(enc.forward[0].value()[i] == doctest::Approx(h0[i]));
    CHECK(enc.backward[2].value()[i] == doctest::Approx(b2[i]));
    CHECK(enc.states[2].value()[4 + i] == doctest::Approx(b2[i]));
  }

  // A padded copy gives identical live states.
  const std::vector<TokenId> padded = {4, 5, 6, corpus::kPad};
  const std::vector<std::uint8_t> mask = {1, 1, 1, 0};
  const EncoderStates encp = encode(g, padded, f.actor, mask);
  for (std::size_t t = 0; t < 3; ++t) CHECK(encp.states[t].value() == enc.states[t].value());
  for (double v : encp.states[3].value().data) CHECK(v == 0.0);
  const DecoderState a = init_decoder(g, enc, f.actor);
  const DecoderState b = init_decoder(g, encp, f.actor);
  CHECK(a.first.value() == b.first.value());
  CHECK(a.first.value() == a.second.value());
  CHECK_THROWS_AS(encode(g, std::vector<TokenId>{}, f.actor), Error);
  CHECK_THROWS_AS(encode(g, std::vector<TokenId>{99}, f.actor), Error);
}

TEST_CASE("attention weights are a distribution and the context their mix") {
  Fixture f({10, 3, 4}, 4);
  const std::vector<TokenId> src = {4, 7, 5, 9};
  Graph g(false);
  const EncoderStates enc = encode(g, src, f.actor);
  const AttentionResult attn =
      attention(g.input(ad::Array::vector({0.2, -0.1, 0.4, 0.3})), enc, f.actor);
  double total = 0.0;
  for (double w : attn.weights.value().data) {
    CHECK(w > 0.0);
    total += w;
  }
  CHECK(total == doctest::Approx(1.0));
  for (std::size_t c = 0; c < 8; ++c) {
    double mix = 0.0;
    for (std::size_t t = 0; t < 4; ++t) mix += attn.weights.value()[t] * enc.states[t].value()[c];
    CHECK(attn.context.value()[c] == doctest::Approx(mix));
  }
}

TEST_CASE("teacher-forced NLL equals the summed per-step log-probabilities") {
  Fixture f({10, 3, 4}, 5);
  const std::vector<TokenId> src = {4, 6, 8};
  const std::vector<TokenId> tgt = {5, 7, kEos};
  Graph g(false);
  const double nll = teacher_forced_nll(g, src, tgt, f.actor).item();
  const EncoderStates enc = encode(g, src, f.actor);
  DecoderState state = init_decoder(g, enc, f.actor);
  TokenId prev = kBos;
  double manual = 0.0;
  for (TokenId y : tgt) {
    StepResult step = decode_step(g, prev, state, enc, f.actor);
    const auto& l = step.logits.value().data;
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : l) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : l) z += std::exp(v - mx);
    manual += (l[y] - mx) - std::log(z);
    state = step.state;
    prev = y;
  }
  CHECK(nll == doctest::Approx(-manual).epsilon(1e-12));
  CHECK(sequence_log_prob(src, tgt, f.actor) == doctest::Approx(manual));
}

TEST_CASE("actor NLL gradients match central differences") {
  Fixture f({7, 3, 3}, 6, 1.0);
  const std::vector<TokenId> src = {4, 6, 5};
  const std::vector<TokenId> tgt = {5, 4, kEos};
  for (ad::Parameter* p : f.store.group(kActorPrefix)) {
    CAPTURE(p->name);
    f.store.zero_gradients();
    Graph g;
    g.backward(teacher_forced_nll(g, src, tgt, f.actor));
    const ad::Array analytic = p->grad;
    const auto numeric = oracle::numeric_gradient(
        [&](const std::vector<double>& v) {
          const auto saved = p->value.data;
          p->value.data = v;
          Graph h(false);
          const double out = teacher_forced_nll(h, src, tgt, f.actor).item();
          p->value.data = saved;
          return out;
        },
        p->value.data, 1e-5);
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      CHECK(std::abs(analytic[i] - numeric[i]) <= 1e-6 * std::max(1.0, std::abs(numeric[i])));
    }
  }
}

TEST_CASE("sampling is reproducible and reports the model's log-probabilities") {
  Fixture f({8, 3, 4}, 7);
  const std::vector<TokenId> src = {4, 5};
  Rng a(99), b(99);
  for (int k = 0; k < 10; ++k) {
    const Sample s = sample_sequence(src, f.actor, 5, a);
    const Sample t = sample_sequence(src, f.actor, 5, b);
    CHECK(s.tokens == t.tokens);
    CHECK(s.tokens.size() <= 5);
    double total = 0.0;
    for (double lp : s.log_probs) total += lp;
    CHECK(sequence_log_prob(src, s.tokens, f.actor) == doctest::Approx(total));
    for (std::size_t i = 0; i + 1 < s.tokens.size(); ++i) CHECK(s.tokens[i] != kEos);
  }
}

TEST_CASE("beam search finds the brute-force argmax and beam 1 is greedy") {
  Rng rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t vocab = 4 + rng.below(3);       // 4..6
    const std::size_t max_len = 1 + rng.below(3);     // 1..3
    Fixture f({vocab, 3, 4}, 100 + trial, 1.5);
    const auto src = random_source(rng, vocab, 1 + rng.below(3));

    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> best_seq;
    for (const auto& seq : oracle::all_outputs(static_cast<int>(vocab), kEos, max_len)) {
      const std::vector<TokenId> ids(seq.begin(), seq.end());
      const double lp = sequence_log_prob(src, ids, f.actor);
      if (lp > best) {
        best = lp;
        best_seq = seq;
      }
    }
    std::size_t exhaustive = 1;
    for (std::size_t t = 0; t < max_len; ++t) exhaustive *= vocab;
    const Hypothesis h = beam_search(src, f.actor, {exhaustive, max_len, false});
    CHECK(std::vector<int>(h.tokens.begin(), h.tokens.end()) == best_seq);
    CHECK(h.log_prob == doctest::Approx(best));

    const Hypothesis one = beam_search(src, f.actor, {1, max_len, false});
    CHECK(one.tokens == greedy_decode(src, f.actor, max_len));
  }
}

TEST_CASE("beam hypotheses report consistent scores") {
  Fixture f({8, 3, 4}, 9, 1.0);
  const std::vector<TokenId> src = {4, 6, 7};
  const Hypothesis h = beam_search(src, f.actor, {4, 6, false});
  CHECK(h.log_prob == doctest::Approx(sequence_log_prob(src, h.tokens, f.actor)));
  CHECK(h.finished == (!h.tokens.empty() && h.tokens.back() == kEos));
  CHECK(strip_eos(std::vector<TokenId>{5, kEos}) == std::vector<TokenId>{5});
  CHECK_THROWS_AS(beam_search(src, f.actor, {0, 6, false}), Error);
}
