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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "acsum/corpus.hpp"
#include "acsum/error.hpp"
#include "doctest.h"

using namespace acsum;
using namespace acsum::corpus;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("acsum_corpus_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("tokenize splits words and code points") {
  CHECK(tokenize("  a bb\tccc\n", TokenMode::kWord) == std::vector<std::string>{"a", "bb", "ccc"});
  CHECK(tokenize("", TokenMode::kWord).empty());
  CHECK(tokenize("ab c", TokenMode::kCharacter) == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("h\xC3\xA9", TokenMode::kCharacter) == std::vector<std::string>{"h", "\xC3\xA9"});
}

TEST_CASE("vocabulary orders by frequency with first-appearance ties") {
  const std::vector<TextPair> pairs = {{"b a c", "a"}, {"c a", "d"}};
  const Vocabulary v = Vocabulary::build(pairs, 100);
  REQUIRE(v.size() == 8);
  CHECK(v.token(kPad) == "<pad>");
  CHECK(v.token(kBos) == "<s>");
  CHECK(v.token(kEos) == "</s>");
  CHECK(v.token(kUnk) == "<unk>");
  CHECK(v.token(4) == "a");  // 3 occurrences
  CHECK(v.token(5) == "c");  // 2 occurrences
  CHECK(v.token(6) == "b");  // 1, seen before d
  CHECK(v.token(7) == "d");
  CHECK(v.id("zzz") == kUnk);
  CHECK(v.contains("d"));

  const Vocabulary small = Vocabulary::build(pairs, 5);
  CHECK(small.size() == 5);
  CHECK(small.id("c") == kUnk);
  CHECK_THROWS_AS(Vocabulary::build(std::vector<TextPair>{}, 10), Error);
  CHECK_THROWS_AS(Vocabulary::build(pairs, 3), Error);
}

TEST_CASE("vocabulary files round-trip and reject corruption") {
  const auto dir = temp_dir("vocab");
  const std::vector<TextPair> pairs = {{"x y z", "x"}};
  const Vocabulary v = Vocabulary::build(pairs, 100);
  v.save(dir / "v.txt");
  CHECK(Vocabulary::load(dir / "v.txt") == v);

  {
    std::ofstream bad(dir / "bad.txt");
    bad << "<pad>\n<s>\n<unk>\n</s>\nx\n";
  }
  CHECK_THROWS_AS(Vocabulary::load(dir / "bad.txt"), Error);
  {
    std::ofstream hashtoken(dir / "hash.txt");
    hashtoken << "# header\n<pad>\n<s>\n</s>\n<unk>\n#\n";
  }
  const Vocabulary h = Vocabulary::load(dir / "hash.txt");
  CHECK(h.size() == 5);
  CHECK(h.id("#") == 4);
  CHECK_THROWS_AS(Vocabulary::load(dir / "missing.txt"), Error);
}

TEST_CASE("encode truncates and appends EOS within max_len") {
  const std::vector<TextPair> pairs = {{"a b c d e", "a b"}};
  const Vocabulary v = Vocabulary::build(pairs, 100);
  const auto src = encode("a b c d e", v, 3, false);
  CHECK(src.size() == 3);
  const auto tgt = encode("a b c d e", v, 3, true);
  REQUIRE(tgt.size() == 3);
  CHECK(tgt.back() == kEos);
  CHECK(encode("", v, 3, true) == TokenSequence{kEos});
  CHECK(encode("a q", v, 5, false)[1] == kUnk);
  CHECK(decode(tgt, v) == "a b");
  CHECK(decode(TokenSequence{kBos, v.id("c"), kPad, kEos, v.id("d")}, v) == "c");

  const SummaryPair p = encode_pair({"a b", "c"}, v, {10, 10});
  CHECK(p.source.size() == 2);
  CHECK(p.target == TokenSequence{v.id("c"), kEos});
  CHECK_THROWS_AS(encode_pair({"", "c"}, v, {10, 10}), Error);
}

TEST_CASE("batches pad rows and keep masks consistent") {
  const std::vector<SummaryPair> pairs = {
      {{4, 5, 6}, {4, kEos}}, {{7}, {5, 6, 7, kEos}}, {{4, 4}, {kEos}}};
  const std::size_t idx[] = {0, 1, 2};
  const PairBatch b = make_batch(pairs, idx);
  REQUIRE(b.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(b.source[i].size() == 3);
    CHECK(b.target[i].size() == 4);
    CHECK(b.row(i) == pairs[i]);
    std::size_t live = 0;
    for (auto m : b.source_mask[i]) live += m;
    CHECK(live == b.source_length[i]);
  }
  CHECK(b.source[1][1] == kPad);

  const auto one = make_batches(pairs, 2, 9);
  const auto two = make_batches(pairs, 2, 9);
  REQUIRE(one.size() == 2);
  CHECK(one[0].indices == two[0].indices);
  CHECK(one[1].size() == 1);
  std::set<std::size_t> seen;
  for (const auto& batch : one) seen.insert(batch.indices.begin(), batch.indices.end());
  CHECK(seen.size() == 3);
}

TEST_CASE("shuffle order depends on the seed") {
  std::vector<SummaryPair> pairs;
  for (int i = 0; i < 20; ++i) pairs.push_back({{4 + i}, {kEos}});
  const auto a = make_batches(pairs, 20, 1);
  const auto b = make_batches(pairs, 20, 2);
  CHECK(a[0].indices != b[0].indices);
}

TEST_CASE("synthetic tasks follow their definitions") {
  const auto copy = gen_synthetic(SyntheticTask::kCopy, 40, 3);
  CHECK(copy.train.size() == 40);
  CHECK(copy.valid.size() == 4);
  std::set<std::string> sources;
  for (const auto& p : copy.train) {
    CHECK(p.source == p.target);
    sources.insert(p.source);
  }
  for (const auto& p : copy.valid) CHECK(sources.count(p.source) == 0);

  const auto rev = gen_synthetic(SyntheticTask::kReverse, 10, 3);
  for (const auto& p : rev.train) {
    auto t = tokenize(p.source, TokenMode::kWord);
    std::reverse(t.begin(), t.end());
    CHECK(t == tokenize(p.target, TokenMode::kWord));
  }

  const auto noisy = gen_synthetic(SyntheticTask::kNoisyHeadline, 200, 3);
  std::size_t with_noise = 0;
  for (const auto& p : noisy.train) {
    const auto src = tokenize(p.source, TokenMode::kWord);
    const auto tgt = tokenize(p.target, TokenMode::kWord);
    CHECK(tgt.size() >= 2);
    CHECK(tgt.size() <= 4);
    bool noise = false;
    for (const auto& t : src) {
      if (t == "#") noise = true;
    }
    with_noise += noise;
    for (const auto& t : tgt) CHECK(t != "#");
  }
  CHECK(with_noise > 100);

  CHECK(gen_synthetic(SyntheticTask::kCopy, 5, 11).train ==
        gen_synthetic(SyntheticTask::kCopy, 5, 11).train);
  CHECK(parse_task("noisy-headline") == SyntheticTask::kNoisyHeadline);
  CHECK(task_name(SyntheticTask::kReverse) == "reverse");
  CHECK_THROWS_AS(parse_task("sort"), Error);
}

TEST_CASE("target noise leaks '#' into training targets only") {
  SyntheticOptions opt;
  opt.target_noise = 0.5;
  opt.valid_fraction = 0.2;
  const auto noisy = gen_synthetic(SyntheticTask::kNoisyHeadline, 300, 3, opt);
  std::size_t leaked = 0, runs = 0;
  for (const auto& p : noisy.train) {
    const auto src = tokenize(p.source, TokenMode::kWord);
    const auto tgt = tokenize(p.target, TokenMode::kWord);
    for (std::size_t i = 0; i < src.size(); ++i) {
      runs += src[i] == "#" && (i == 0 || src[i - 1] != "#");
    }
    // Each kept "#" follows its keyword, never another "#".
    for (std::size_t i = 0; i < tgt.size(); ++i) {
      if (tgt[i] != "#") continue;
      ++leaked;
      CHECK(i > 0);
      CHECK(tgt[i - 1] != "#");
    }
  }
  CHECK(leaked > runs / 3);
  CHECK(leaked < 2 * runs / 3);
  for (const auto& p : noisy.valid) {
    for (const auto& t : tokenize(p.target, TokenMode::kWord)) CHECK(t != "#");
  }
  // Zero noise reproduces the default generator exactly.
  opt.target_noise = 0.0;
  SyntheticOptions plain;
  plain.valid_fraction = 0.2;
  CHECK(gen_synthetic(SyntheticTask::kNoisyHeadline, 50, 3, opt).train ==
        gen_synthetic(SyntheticTask::kNoisyHeadline, 50, 3, plain).train);
  opt.target_noise = 1.5;
  CHECK_THROWS_AS(gen_synthetic(SyntheticTask::kNoisyHeadline, 5, 3, opt), Error);
}

TEST_CASE("parallel files round-trip and reject mismatched lengths") {
  const auto dir = temp_dir("parallel");
  const std::vector<TextPair> pairs = {{"a b", "a"}, {"c", "c d"}};
  write_parallel(dir / "train", pairs);
  CHECK(read_parallel(dir / "train") == pairs);
  {
    std::ofstream extra(dir / "train.tgt", std::ios::app);
    extra << "extra\n";
  }
  CHECK_THROWS_AS(read_parallel(dir / "train"), Error);
  CHECK_THROWS_AS(read_parallel(dir / "nothing"), Error);
}
