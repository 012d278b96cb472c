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

// ROUGE-N and ROUGE-L with exact-string token matching after lowercasing.
// No stemming and no stopword removal.

#ifndef ACSUM_ROUGE_HPP_
#define ACSUM_ROUGE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace acsum::rouge {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// f1 = 2PR / (P + R), or 0 when P + R == 0.
RougeScore make_score(double overlap, std::size_t hyp_units, std::size_t ref_units);

// Whitespace split with ASCII lowercasing.
std::vector<std::string> tokenize(std::string_view text);

// Clipped n-gram overlap. Empty n-gram sets score 0.
RougeScore rouge_n(std::span<const std::string> hyp, std::span<const std::string> ref,
                   std::size_t n);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
RougeScore rouge_l(std::span<const std::string> hyp, std::span<const std::string> ref);

// Longest prefix of at most max_bytes bytes that ends on a UTF-8 boundary.
std::string truncate_utf8(std::string_view text, std::size_t max_bytes);

enum class Mode { kF1, kRecall };

struct EvalOptions {
  Mode mode = Mode::kF1;
  std::optional<std::size_t> byte_limit;
};

struct CorpusScores {
  RougeScore rouge1;
  RougeScore rouge2;
  RougeScore rougel;
  std::size_t count = 0;

  // {"r1":{"p":..,"r":..,"f":..},"r2":{..},"rl":{..}}
  std::string to_json() const;
};

// Per example, each metric takes the reference that maximizes the mode's
// statistic (F1 or recall); the corpus score is the arithmetic mean.
CorpusScores evaluate_corpus(std::span<const std::string> hyps,
                             std::span<const std::vector<std::string>> references,
                             const EvalOptions& options = {});

}  // namespace acsum::rouge

#endif  // ACSUM_ROUGE_HPP_
