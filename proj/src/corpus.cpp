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

#include "acsum/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "acsum/error.hpp"
#include "acsum/random.hpp"

namespace acsum::corpus {
namespace {

constexpr const char* kReservedTokens[kReservedCount] = {"<pad>", "<s>", "</s>", "<unk>"};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation byte: keep it as its own token
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, TokenMode mode) {
  std::vector<std::string> out;
  if (mode == TokenMode::kWord) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_space(text[i])) ++i;
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j])) ++j;
      if (j > i) out.emplace_back(text.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    const std::size_t len = std::min(utf8_length(static_cast<unsigned char>(text[i])), text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  for (const char* t : kReservedTokens) push(t);
}

void Vocabulary::push(const std::string& token) {
  if (index_.contains(token)) {
    fail(ErrorKind::kFormat, "vocabulary: duplicate token '" + token + "'");
  }
  index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(std::span<const TextPair> pairs, std::size_t max_size, TokenMode mode) {
  if (max_size < kReservedCount) {
    fail(ErrorKind::kInvalidArgument, "build_vocab: max_size must be at least 4");
  }
  if (pairs.empty()) fail(ErrorKind::kInvalidArgument, "build_vocab: empty pair stream");

  struct Count {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Count> counts;
  std::vector<std::string> order;
  auto observe = [&](const std::string& text) {
    for (auto& tok : tokenize(text, mode)) {
      auto [it, fresh] = counts.try_emplace(tok, Count{0, order.size()});
      if (fresh) order.push_back(tok);
      ++it->second.count;
    }
  };
  for (const TextPair& p : pairs) {
    observe(p.source);
    observe(p.target);
  }

  Vocabulary vocab;
  std::erase_if(order, [&](const std::string& t) { return vocab.contains(t); });
  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    return counts[a].count > counts[b].count;
  });
  for (const std::string& tok : order) {
    if (vocab.size() >= max_size) break;
    vocab.push(tok);
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::size_t i = 0;
  while (i < lines.size() && !lines[i].empty() && lines[i][0] == '#') ++i;
  if (lines.size() - i < kReservedCount) {
    fail(ErrorKind::kFormat, "vocabulary file " + path.string() + ": missing reserved entries");
  }
  for (std::size_t r = 0; r < kReservedCount; ++r) {
    if (lines[i + r] != kReservedTokens[r]) {
      fail(ErrorKind::kFormat, "vocabulary file " + path.string() + ": reserved entry " +
                                   std::to_string(r) + " must be " + kReservedTokens[r]);
    }
  }
  Vocabulary vocab;
  for (std::size_t k = i + kReservedCount; k < lines.size(); ++k) {
    if (lines[k].empty()) fail(ErrorKind::kFormat, "vocabulary file " + path.string() + ": empty token line");
    vocab.push(lines[k]);
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write vocabulary file " + path.string());
  out << "# acsum vocabulary: line index after this header is the token id\n";
  for (const std::string& t : tokens_) out << t << '\n';
  if (!out) fail(ErrorKind::kIo, "failed writing vocabulary file " + path.string());
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    fail(ErrorKind::kInvalidArgument, "vocabulary: id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

// ---------------------------------------------------------------------------
// Encoding

TokenSequence encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len,
                     bool append_eos, TokenMode mode) {
  if (max_len == 0) fail(ErrorKind::kInvalidArgument, "encode: max_len must be at least 1");
  const std::size_t keep = append_eos ? max_len - 1 : max_len;
  TokenSequence out;
  for (const std::string& tok : tokenize(text, mode)) {
    if (out.size() == keep) break;
    out.push_back(vocab.id(tok));
  }
  if (append_eos) out.push_back(kEos);
  return out;
}

std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::vector<std::string> words;
  for (TokenId id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    words.push_back(vocab.token(id));
  }
  return join(words);
}

SummaryPair encode_pair(const TextPair& pair, const Vocabulary& vocab, const Limits& limits,
                        TokenMode mode) {
  SummaryPair out{encode(pair.source, vocab, limits.max_source_len, false, mode),
                  encode(pair.target, vocab, limits.max_target_len, true, mode)};
  if (out.source.empty()) fail(ErrorKind::kInvalidArgument, "encode_pair: empty source text");
  return out;
}

std::vector<SummaryPair> encode_pairs(std::span<const TextPair> pairs, const Vocabulary& vocab,
                                      const Limits& limits, TokenMode mode) {
  std::vector<SummaryPair> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      out.push_back(encode_pair(pairs[i], vocab, limits, mode));
    } catch (const Error& e) {
      fail(e.kind(), "example " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batching

SummaryPair PairBatch::row(std::size_t i) const {
  SummaryPair p;
  p.source.assign(source[i].begin(), source[i].begin() + static_cast<std::ptrdiff_t>(source_length[i]));
  p.target.assign(target[i].begin(), target[i].begin() + static_cast<std::ptrdiff_t>(target_length[i]));
  return p;
}

PairBatch make_batch(std::span<const SummaryPair> pairs, std::span<const std::size_t> indices) {
  PairBatch b;
  std::size_t src_width = 0, tgt_width = 0;
  for (std::size_t idx : indices) {
    src_width = std::max(src_width, pairs[idx].source.size());
    tgt_width = std::max(tgt_width, pairs[idx].target.size());
  }
  for (std::size_t idx : indices) {
    const SummaryPair& p = pairs[idx];
    b.indices.push_back(idx);
    auto pad = [](const TokenSequence& seq, std::size_t width, TokenSequence& row,
                  std::vector<std::uint8_t>& mask) {
      row.assign(width, kPad);
      mask.assign(width, 0);
      std::copy(seq.begin(), seq.end(), row.begin());
      std::fill_n(mask.begin(), seq.size(), 1);
    };
    b.source.emplace_back();
    b.source_mask.emplace_back();
    pad(p.source, src_width, b.source.back(), b.source_mask.back());
    b.target.emplace_back();
    b.target_mask.emplace_back();
    pad(p.target, tgt_width, b.target.back(), b.target_mask.back());
    b.source_length.push_back(p.source.size());
    b.target_length.push_back(p.target.size());
  }
  return b;
}

std::vector<PairBatch> make_batches(std::span<const SummaryPair> pairs, std::size_t batch_size,
                                    std::uint64_t shuffle_seed) {
  if (batch_size == 0) fail(ErrorKind::kInvalidArgument, "make_batches: batch size must be at least 1");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(shuffle_seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::vector<PairBatch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    out.push_back(make_batch(pairs, std::span(order).subspan(start, end - start)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic tasks

SyntheticTask parse_task(std::string_view name) {
  if (name == "copy") return SyntheticTask::kCopy;
  if (name == "reverse") return SyntheticTask::kReverse;
  if (name == "noisy-headline") return SyntheticTask::kNoisyHeadline;
  fail(ErrorKind::kInvalidArgument, "unknown synthetic task: " + std::string(name));
}

std::string_view task_name(SyntheticTask task) {
  switch (task) {
    case SyntheticTask::kCopy: return "copy";
    case SyntheticTask::kReverse: return "reverse";
    case SyntheticTask::kNoisyHeadline: return "noisy-headline";
  }
  return "unknown";
}

namespace {

constexpr const char* kHeadlineWords[] = {
    "sales",  "rise",   "stocks", "fall",   "bank",  "cuts",  "rates", "oil",
    "prices", "jump",   "profit", "drops",  "jobs",  "grow",  "trade", "talks",
    "market", "slips",  "firm",   "merger", "exports", "surge", "debt", "deal"};
constexpr const char* kFillerWords[] = {"q1", "q2", "q3", "q4", "today", "report"};

TextPair make_example(SyntheticTask task, Rng& rng, const SyntheticOptions& opt, bool training) {
  const std::size_t span = opt.max_len - opt.min_len + 1;
  if (task == SyntheticTask::kNoisyHeadline) {
    const std::size_t n_keys = 2 + rng.below(3);
    const double noise = training ? opt.target_noise : 0.0;
    std::vector<std::string> keys, source;
    for (std::size_t k = 0; k < n_keys; ++k) {
      keys.emplace_back(kHeadlineWords[rng.below(std::size(kHeadlineWords))]);
      source.push_back(keys.back());
      if (rng.uniform() < 0.6) {
        const std::size_t run = 1 + rng.below(4);
        for (std::size_t r = 0; r < run; ++r) source.emplace_back("#");
        if (noise > 0.0 && rng.uniform() < noise) keys.emplace_back("#");
      }
    }
    const std::size_t n_fill = rng.below(3);
    for (std::size_t f = 0; f < n_fill; ++f) {
      source.emplace_back(kFillerWords[rng.below(std::size(kFillerWords))]);
    }
    return {join(source), join(keys)};
  }
  const std::size_t len = opt.min_len + rng.below(span);
  std::vector<std::string> seq;
  for (std::size_t i = 0; i < len; ++i) {
    seq.emplace_back(1, static_cast<char>('a' + rng.below(opt.alphabet)));
  }
  std::vector<std::string> target = seq;
  if (task == SyntheticTask::kReverse) std::reverse(target.begin(), target.end());
  return {join(seq), join(target)};
}

}  // namespace

SyntheticCorpus gen_synthetic(SyntheticTask task, std::size_t count, std::uint64_t seed,
                              const SyntheticOptions& options) {
  if (options.min_len == 0 || options.max_len < options.min_len) {
    fail(ErrorKind::kInvalidArgument, "gen_synthetic: invalid length range");
  }
  if (options.alphabet == 0 || options.alphabet > 26) {
    fail(ErrorKind::kInvalidArgument, "gen_synthetic: alphabet must be in [1, 26]");
  }
  if (options.target_noise < 0.0 || options.target_noise > 1.0) {
    fail(ErrorKind::kInvalidArgument, "gen_synthetic: target_noise must be in [0, 1]");
  }
  if (options.valid_fraction < 0.0 || options.valid_fraction >= 1.0) {
    fail(ErrorKind::kInvalidArgument, "gen_synthetic: valid_fraction must be in [0, 1)");
  }
  const std::size_t n_valid = count == 0 || options.valid_fraction == 0.0
                                  ? 0
                                  : std::max<std::size_t>(1, static_cast<std::size_t>(
                                                                 count * options.valid_fraction + 0.5));
  Rng rng(seed);
  std::set<std::string> seen;
  SyntheticCorpus out;
  const std::size_t budget = 1000 * (count + n_valid) + 1000;
  for (std::size_t attempt = 0; out.train.size() + out.valid.size() < count + n_valid; ++attempt) {
    if (attempt > budget) {
      fail(ErrorKind::kInvalidArgument, "gen_synthetic: cannot draw enough distinct examples");
    }
    TextPair p = make_example(task, rng, options, out.train.size() < count);
    if (!seen.insert(p.source).second) continue;
    (out.train.size() < count ? out.train : out.valid).push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<TextPair> read_parallel(const std::filesystem::path& stem) {
  const auto src = read_lines(stem.string() + ".src");
  const auto tgt = read_lines(stem.string() + ".tgt");
  if (src.size() != tgt.size()) {
    fail(ErrorKind::kInvalidArgument, "parallel corpus " + stem.string() + ": " +
                                          std::to_string(src.size()) + " source lines vs " +
                                          std::to_string(tgt.size()) + " target lines");
  }
  std::vector<TextPair> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out.push_back({src[i], tgt[i]});
  return out;
}

void write_parallel(const std::filesystem::path& stem, std::span<const TextPair> pairs) {
  std::ofstream src(stem.string() + ".src", std::ios::binary);
  std::ofstream tgt(stem.string() + ".tgt", std::ios::binary);
  if (!src || !tgt) fail(ErrorKind::kIo, "cannot write parallel corpus " + stem.string());
  for (const TextPair& p : pairs) {
    src << p.source << '\n';
    tgt << p.target << '\n';
  }
  if (!src || !tgt) fail(ErrorKind::kIo, "failed writing parallel corpus " + stem.string());
}

}  // namespace acsum::corpus
