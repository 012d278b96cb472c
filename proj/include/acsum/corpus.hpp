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

// Corpus side: tokenization, vocabulary, padded batches and the synthetic
// tasks used for desk-scale experiments.

#ifndef ACSUM_CORPUS_HPP_
#define ACSUM_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace acsum::corpus {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr std::size_t kReservedCount = 4;

enum class TokenMode { kWord, kCharacter };

// Word mode splits on ASCII whitespace; character mode yields one token per
// UTF-8 code point and drops whitespace.
std::vector<std::string> tokenize(std::string_view text, TokenMode mode);

struct TextPair {
  std::string source;
  std::string target;
  bool operator==(const TextPair&) const = default;
};

class Vocabulary {
 public:
  // Reserved entries only.
  Vocabulary();

  // Keeps the most frequent tokens of both sides, up to max_size entries
  // including the reserved four. Ties go to the earlier first appearance.
  static Vocabulary build(std::span<const TextPair> pairs, std::size_t max_size,
                          TokenMode mode = TokenMode::kWord);

  // One token per line, reserved entries first, so line index == id.
  // Leading lines that start with '#' are a header and are skipped.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void push(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Maps tokens to ids (unknown -> UNK) and truncates. With append_eos the
// result holds at most max_len - 1 tokens followed by EOS, so it never
// exceeds max_len.
TokenSequence encode(std::string_view text, const Vocabulary& vocab,
                     std::size_t max_len, bool append_eos,
                     TokenMode mode = TokenMode::kWord);

// Space-joined tokens up to the first EOS; PAD and BOS are skipped.
std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab);

struct SummaryPair {
  TokenSequence source;  // x_1..x_m, no EOS
  TokenSequence target;  // y_1..y_n, EOS-terminated
  bool operator==(const SummaryPair&) const = default;
};

struct Limits {
  std::size_t max_source_len = 100;
  std::size_t max_target_len = 50;
};

SummaryPair encode_pair(const TextPair& pair, const Vocabulary& vocab,
                        const Limits& limits, TokenMode mode = TokenMode::kWord);

std::vector<SummaryPair> encode_pairs(std::span<const TextPair> pairs,
                                      const Vocabulary& vocab, const Limits& limits,
                                      TokenMode mode = TokenMode::kWord);

struct PairBatch {
  std::vector<std::size_t> indices;  // positions in the originating pair list
  std::vector<TokenSequence> source;  // padded with kPad to a common width
  std::vector<TokenSequence> target;
  std::vector<std::vector<std::uint8_t>> source_mask;
  std::vector<std::vector<std::uint8_t>> target_mask;
  std::vector<std::size_t> source_length;
  std::vector<std::size_t> target_length;

  std::size_t size() const { return indices.size(); }
  // Unpadded row i.
  SummaryPair row(std::size_t i) const;
};

PairBatch make_batch(std::span<const SummaryPair> pairs,
                     std::span<const std::size_t> indices);

// One epoch of batches in a seed-determined order; the last batch may be short.
std::vector<PairBatch> make_batches(std::span<const SummaryPair> pairs,
                                    std::size_t batch_size, std::uint64_t shuffle_seed);

enum class SyntheticTask { kCopy, kReverse, kNoisyHeadline };

SyntheticTask parse_task(std::string_view name);
std::string_view task_name(SyntheticTask task);

struct SyntheticOptions {
  std::size_t min_len = 3;
  std::size_t max_len = 6;
  std::size_t alphabet = 26;  // copy/reverse draw from the first N letters
  double valid_fraction = 0.1;
  // noisy-headline only: chance that a "#" run leaves one "#" in a training
  // target. Validation targets are always clean.
  double target_noise = 0.0;
};

struct SyntheticCorpus {
  std::vector<TextPair> train;
  std::vector<TextPair> valid;
};

// count training pairs plus a disjoint validation slice.
SyntheticCorpus gen_synthetic(SyntheticTask task, std::size_t count, std::uint64_t seed,
                              const SyntheticOptions& options = {});

// Parallel files <stem>.src / <stem>.tgt, one example per line.
std::vector<TextPair> read_parallel(const std::filesystem::path& stem);
void write_parallel(const std::filesystem::path& stem, std::span<const TextPair> pairs);

std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace acsum::corpus

#endif  // ACSUM_CORPUS_HPP_
