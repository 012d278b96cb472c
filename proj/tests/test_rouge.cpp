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

#include <map>
#include <string>
#include <vector>

#include "acsum/error.hpp"
#include "acsum/random.hpp"
#include "acsum/rouge.hpp"
#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

using namespace acsum;
using namespace acsum::rouge;

namespace {

std::vector<std::string> words(const char* text) { return tokenize(text); }

std::vector<std::string> random_tokens(Rng& rng, std::size_t max_len, std::size_t alphabet) {
  std::vector<std::string> out(rng.below(max_len + 1));
  for (auto& t : out) t = std::string(1, static_cast<char>('a' + rng.below(alphabet)));
  return out;
}

}  // namespace

TEST_CASE("hand-computed fixtures") {
  const RougeScore r1 = rouge_n(words("the cat sat"), words("the cat"), 1);
  CHECK(r1.precision == doctest::Approx(2.0 / 3.0));
  CHECK(r1.recall == 1.0);
  CHECK(r1.f1 == doctest::Approx(0.8));

  const RougeScore r2 = rouge_n(words("a b c"), words("a b d"), 2);
  CHECK(r2.precision == 0.5);
  CHECK(r2.recall == 0.5);
  CHECK(r2.f1 == 0.5);

  const RougeScore rl = rouge_l(words("a c b"), words("a b c"));
  CHECK(lcs_length(words("a c b"), words("a b c")) == 2);
  CHECK(rl.precision == doctest::Approx(2.0 / 3.0));
  CHECK(rl.recall == doctest::Approx(2.0 / 3.0));
  CHECK(rl.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("identity, disjoint and empty inputs") {
  const auto x = words("a b a c");
  for (std::size_t n : {1, 2, 3}) {
    const RougeScore s = rouge_n(x, x, n);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
  }
  CHECK(rouge_l(x, x).f1 == 1.0);
  const RougeScore d = rouge_l(words("a b"), words("c d"));
  CHECK(d.precision == 0.0);
  CHECK(d.f1 == 0.0);
  CHECK(rouge_n(words("a"), words("a"), 2).f1 == 0.0);
  CHECK(rouge_n({}, words("a"), 1).f1 == 0.0);
  CHECK_THROWS_AS(rouge_n(x, x, 0), Error);
}

TEST_CASE("n-gram overlap is clipped by the reference count") {
  const RougeScore s = rouge_n(words("a a a a"), words("a a b"), 1);
  CHECK(s.precision == 0.5);
  CHECK(s.recall == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("tokens are lowercased") {
  CHECK(rouge_n(words("The CAT"), words("the cat"), 1).f1 == 1.0);
}

TEST_CASE("rouge_l matches the brute-force LCS oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = random_tokens(rng, 6, 4);
    const auto b = random_tokens(rng, 6, 4);
    const std::size_t expect = oracle::brute_lcs(a, b);
    CHECK(lcs_length(a, b) == expect);
    const RougeScore s = rouge_l(a, b);
    if (!a.empty()) CHECK(s.precision == doctest::Approx(static_cast<double>(expect) / a.size()));
    if (!b.empty()) CHECK(s.recall == doctest::Approx(static_cast<double>(expect) / b.size()));
  }
}

TEST_CASE("scores are invariant under token relabeling and bounded") {
  Rng rng(23);
  const std::map<std::string, std::string> rename = {{"a", "q"}, {"b", "r"}, {"c", "s"}, {"d", "t"}};
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_tokens(rng, 6, 4);
    const auto b = random_tokens(rng, 6, 4);
    auto ra = a, rb = b;
    for (auto& t : ra) t = rename.at(t);
    for (auto& t : rb) t = rename.at(t);
    for (std::size_t n : {1, 2}) {
      const RougeScore s = rouge_n(a, b, n);
      CHECK(s.f1 == rouge_n(ra, rb, n).f1);
      CHECK(s.f1 <= std::max(s.precision, s.recall) + 1e-15);
      CHECK(s.f1 >= 0.0);
      CHECK(s.f1 <= 1.0);
    }
    CHECK(rouge_l(a, b).f1 == rouge_l(ra, rb).f1);
  }
}

TEST_CASE("corpus evaluation takes the best reference and averages") {
  const std::vector<std::string> hyps = {"a b", "x y"};
  const std::vector<std::vector<std::string>> refs = {{"a b", "z"}, {"x q"}};
  const CorpusScores s = evaluate_corpus(hyps, refs);
  CHECK(s.count == 2);
  CHECK(s.rouge1.f1 == doctest::Approx((1.0 + 0.5) / 2.0));
  CHECK(s.rouge2.f1 == doctest::Approx(0.5));

  const std::vector<std::vector<std::string>> one = {{"z"}, {"x q"}};
  CHECK(evaluate_corpus(hyps, one).rouge1.f1 == doctest::Approx(0.25));
  CHECK_THROWS_AS(evaluate_corpus(hyps, std::vector<std::vector<std::string>>{{"a"}}), Error);
  CHECK_THROWS_AS(evaluate_corpus(hyps, std::vector<std::vector<std::string>>{{"a"}, {}}), Error);

  const auto j = nlohmann::json::parse(s.to_json());
  CHECK(j.at("r1").at("f").get<double>() == doctest::Approx(0.75));
  CHECK(j.contains("r2"));
  CHECK(j.contains("rl"));
}

TEST_CASE("recall mode selects references by recall") {
  const std::vector<std::string> hyps = {"a b"};
  // The first reference has the better F1, the second the better recall.
  const std::vector<std::vector<std::string>> refs = {{"a b c", "a"}};
  EvalOptions recall;
  recall.mode = Mode::kRecall;
  CHECK(evaluate_corpus(hyps, refs, recall).rouge1.recall == 1.0);
  CHECK(evaluate_corpus(hyps, refs).rouge1.f1 == doctest::Approx(0.8));
}

TEST_CASE("byte truncation never splits a character") {
  CHECK(truncate_utf8("abcdefgh", 5) == "abcde");
  CHECK(truncate_utf8("abc", 10) == "abc");
  CHECK(truncate_utf8("a\xC3\xA9z", 2) == "a");
  CHECK(truncate_utf8("a\xC3\xA9z", 3) == "a\xC3\xA9");
  CHECK(truncate_utf8("\xE2\x82\xAC", 2).empty());

  EvalOptions limit;
  limit.byte_limit = 5;
  const std::vector<std::string> hyps = {"abcdefgh"};
  const std::vector<std::vector<std::string>> refs = {{"abcde"}};
  CHECK(evaluate_corpus(hyps, refs, limit).rouge1.f1 == 1.0);
  CHECK(evaluate_corpus(hyps, refs).rouge1.f1 == 0.0);
}
