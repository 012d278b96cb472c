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

#include "acsum/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "acsum/corpus.hpp"
#include "acsum/error.hpp"
#include "json.hpp"

namespace acsum::rouge {

RougeScore make_score(double overlap, std::size_t hyp_units, std::size_t ref_units) {
  RougeScore s;
  s.precision = hyp_units ? overlap / static_cast<double>(hyp_units) : 0.0;
  s.recall = ref_units ? overlap / static_cast<double>(ref_units) : 0.0;
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out = corpus::tokenize(text, corpus::TokenMode::kWord);
  for (std::string& t : out) {
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) {
      return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
    });
  }
  return out;
}

namespace {

using NGramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NGramCounts count_ngrams(std::span<const std::string> tokens, std::size_t n, std::size_t& total) {
  NGramCounts counts;
  total = 0;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++counts[gram];
    ++total;
  }
  return counts;
}

}  // namespace

RougeScore rouge_n(std::span<const std::string> hyp, std::span<const std::string> ref, std::size_t n) {
  if (n == 0) fail(ErrorKind::kInvalidArgument, "rouge_n: n must be at least 1");
  std::size_t hyp_total = 0, ref_total = 0;
  const NGramCounts h = count_ngrams(hyp, n, hyp_total);
  const NGramCounts r = count_ngrams(ref, n, ref_total);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : h) {
    if (auto it = r.find(gram); it != r.end()) overlap += std::min(count, it->second);
  }
  return make_score(static_cast<double>(overlap), hyp_total, ref_total);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::span<const std::string> hyp, std::span<const std::string> ref) {
  return make_score(static_cast<double>(lcs_length(hyp, ref)), hyp.size(), ref.size());
}

std::string truncate_utf8(std::string_view text, std::size_t max_bytes) {
  if (text.size() <= max_bytes) return std::string(text);
  std::size_t cut = max_bytes;
  // Back off over continuation bytes so the cut lands on a character start.
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return std::string(text.substr(0, cut));
}

std::string CorpusScores::to_json() const {
  auto block = [](const RougeScore& s) {
    return nlohmann::json{{"p", s.precision}, {"r", s.recall}, {"f", s.f1}};
  };
  nlohmann::json j{{"r1", block(rouge1)}, {"r2", block(rouge2)}, {"rl", block(rougel)}};
  return j.dump();
}

CorpusScores evaluate_corpus(std::span<const std::string> hyps,
                             std::span<const std::vector<std::string>> references,
                             const EvalOptions& options) {
  if (hyps.size() != references.size()) {
    fail(ErrorKind::kInvalidArgument, "evaluate_corpus: " + std::to_string(hyps.size()) +
                                          " hypotheses vs " + std::to_string(references.size()) +
                                          " reference sets");
  }
  auto key = [&](const RougeScore& s) { return options.mode == Mode::kF1 ? s.f1 : s.recall; };
  auto accumulate = [](RougeScore& into, const RougeScore& s) {
    into.precision += s.precision;
    into.recall += s.recall;
    into.f1 += s.f1;
  };

  CorpusScores out;
  out.count = hyps.size();
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (references[i].empty()) {
      fail(ErrorKind::kInvalidArgument, "evaluate_corpus: example " + std::to_string(i + 1) +
                                            " has no reference");
    }
    const std::string text = options.byte_limit ? truncate_utf8(hyps[i], *options.byte_limit) : hyps[i];
    const std::vector<std::string> hyp = tokenize(text);
    RougeScore best1, best2, bestl;
    bool first = true;
    for (const std::string& ref_text : references[i]) {
      const std::vector<std::string> ref = tokenize(ref_text);
      const RougeScore s1 = rouge_n(hyp, ref, 1);
      const RougeScore s2 = rouge_n(hyp, ref, 2);
      const RougeScore sl = rouge_l(hyp, ref);
      if (first || key(s1) > key(best1)) best1 = s1;
      if (first || key(s2) > key(best2)) best2 = s2;
      if (first || key(sl) > key(bestl)) bestl = sl;
      first = false;
    }
    accumulate(out.rouge1, best1);
    accumulate(out.rouge2, best2);
    accumulate(out.rougel, bestl);
  }
  if (out.count > 0) {
    const double n = static_cast<double>(out.count);
    for (RougeScore* s : {&out.rouge1, &out.rouge2, &out.rougel}) {
      s->precision /= n;
      s->recall /= n;
      s->f1 /= n;
    }
  }
  return out;
}

}  // namespace acsum::rouge
