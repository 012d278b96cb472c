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

// Exercises the shared library through its C header only.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "acsum/acsum.h"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Takes ownership of a library-allocated string.
std::string take(char* s) {
  std::string out = s ? s : "";
  acsum_string_free(s);
  return out;
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("acsum-capi-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* kConfig =
    R"({"k1":2,"k2":2,"k3":4,"embed_dim":4,"hidden_dim":6,"vocab_size":20,)"
    R"("max_source_len":6,"max_target_len":6,"batch_size":4,"beam_size":2,)"
    R"("init_scale":0.3,"threads":1,"seed":3})";

std::string trainer_events(const acsum_trainer* t) {
  char* s = nullptr;
  REQUIRE(acsum_trainer_events(t, &s) == ACSUM_OK);
  return take(s);
}

std::string trainer_metrics(const acsum_trainer* t) {
  char* s = nullptr;
  REQUIRE(acsum_trainer_metrics(t, &s) == ACSUM_OK);
  return take(s);
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(acsum_status_name(ACSUM_OK)) == "ok");
  CHECK(std::string(acsum_status_name(ACSUM_ERR_FORMAT)) == "format error");
  CHECK(std::string(acsum_version()).size() > 0);
}

TEST_CASE("null arguments report invalid argument and set the error message") {
  acsum_trainer* t = nullptr;
  CHECK(acsum_trainer_create(nullptr, "x", &t) == ACSUM_ERR_INVALID_ARGUMENT);
  CHECK(t == nullptr);
  CHECK(std::string(acsum_last_error()).size() > 0);
  CHECK(acsum_synth("copy", 0, 1, 0.0, "/tmp") == ACSUM_ERR_INVALID_ARGUMENT);
  CHECK(acsum_synth("sort", 5, 1, 0.0, "/tmp") == ACSUM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(acsum_version()).size() > 0);
  CHECK(acsum_debug_corrupt_backward("no-such-op") == ACSUM_ERR_INVALID_ARGUMENT);
  CHECK(acsum_debug_corrupt_backward(nullptr) == ACSUM_OK);
  CHECK(std::string(acsum_last_error()).empty());
  acsum_trainer_free(nullptr);
  acsum_model_free(nullptr);
  acsum_string_free(nullptr);
}

TEST_CASE("training, checkpointing, resume and generation") {
  TempDir dir;
  const fs::path data = dir.path / "data";
  REQUIRE(acsum_synth("copy", 16, 9, 0.0, data.c_str()) == ACSUM_OK);
  CHECK(fs::exists(data / "train.src"));
  CHECK(fs::exists(data / "valid.tgt"));

  acsum_trainer* bad = nullptr;
  CHECK(acsum_trainer_create(R"({"k9":1})", data.c_str(), &bad) == ACSUM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(acsum_last_error()).find("k9") != std::string::npos);
  CHECK(acsum_trainer_create(kConfig, (dir.path / "none").c_str(), &bad) != ACSUM_OK);
  CHECK(bad == nullptr);

  // Uninterrupted reference run.
  acsum_trainer* full = nullptr;
  REQUIRE(acsum_trainer_create(kConfig, data.c_str(), &full) == ACSUM_OK);
  const fs::path out = dir.path / "out";
  REQUIRE(acsum_trainer_run(full, out.c_str()) == ACSUM_OK);
  CHECK(acsum_trainer_finished(full) == 1);
  const std::string full_events = trainer_events(full);
  const std::string full_metrics = trainer_metrics(full);
  CHECK(slurp(out / "events.jsonl") == full_events);
  CHECK(slurp(out / "metrics.jsonl") == full_metrics);
  CHECK(fs::exists(out / "checkpoints" / "epoch-001" / "manifest.json"));
  CHECK(fs::exists(out / "checkpoints" / "epoch-004" / "manifest.json"));
  CHECK(fs::exists(out / "checkpoints" / "last" / "manifest.json"));

  std::size_t lines = 0;
  std::istringstream ev(full_events);
  for (std::string line; std::getline(ev, line); ++lines) {
    const json j = json::parse(line);
    CHECK(j.contains("kind"));
  }
  CHECK(lines > 0);

  // Stop mid-run, save, resume and finish.
  acsum_trainer* head = nullptr;
  REQUIRE(acsum_trainer_create(kConfig, data.c_str(), &head) == ACSUM_OK);
  std::size_t done = 0;
  REQUIRE(acsum_trainer_step(head, 5, &done) == ACSUM_OK);
  CHECK(done == 5);
  CHECK(acsum_trainer_finished(head) == 0);
  const fs::path ckpt = dir.path / "mid";
  REQUIRE(acsum_trainer_save(head, ckpt.c_str()) == ACSUM_OK);
  acsum_trainer_free(head);

  acsum_trainer* mismatch = nullptr;
  CHECK(acsum_trainer_resume(ckpt.c_str(), R"({"k1":3})", data.c_str(), &mismatch) ==
        ACSUM_ERR_INVALID_ARGUMENT);
  CHECK(mismatch == nullptr);

  acsum_trainer* tail = nullptr;
  REQUIRE(acsum_trainer_resume(ckpt.c_str(), kConfig, data.c_str(), &tail) == ACSUM_OK);
  REQUIRE(acsum_trainer_step(tail, 100000, &done) == ACSUM_OK);
  CHECK(acsum_trainer_finished(tail) == 1);
  CHECK(trainer_events(tail) == full_events);
  CHECK(trainer_metrics(tail) == full_metrics);
  acsum_trainer_free(tail);
  acsum_trainer_free(full);

  // Generation.
  acsum_model* m = nullptr;
  CHECK(acsum_model_load((dir.path / "none").c_str(), &m) != ACSUM_OK);
  CHECK(m == nullptr);
  REQUIRE(acsum_model_load((out / "checkpoints" / "last").c_str(), &m) == ACSUM_OK);
  char* text = nullptr;
  REQUIRE(acsum_model_generate(m, "a b c\nd e\n\nb", 3, 0, &text) == ACSUM_OK);
  const std::string gen = take(text);
  CHECK(std::count(gen.begin(), gen.end(), '\n') == 4);
  REQUIRE(acsum_model_generate(m, "", 3, 0, &text) == ACSUM_OK);
  CHECK(take(text).empty());
  CHECK(acsum_model_generate(m, "a", 0, 0, &text) == ACSUM_ERR_INVALID_ARGUMENT);
  REQUIRE(acsum_model_generate(m, "a b c", 1, 2, &text) == ACSUM_OK);
  const std::string capped = take(text);
  CHECK(std::count(capped.begin(), capped.end(), ' ') <= 1);
  acsum_model_free(m);
}

TEST_CASE("evaluation over files") {
  TempDir dir;
  const fs::path hyp = dir.path / "hyp.txt", ref = dir.path / "ref.txt",
                 ref2 = dir.path / "ref2.txt", short_ref = dir.path / "short.txt";
  std::ofstream(hyp) << "the cat sat\nhello world\n";
  std::ofstream(ref) << "the cat sat\nhello world\n";
  std::ofstream(ref2) << "a dog ran\ngoodbye\n";
  std::ofstream(short_ref) << "one line\n";

  char* out = nullptr;
  const std::string r = ref.string(), r2 = ref2.string(), s = short_ref.string();
  const char* refs[] = {r.c_str()};
  REQUIRE(acsum_evaluate_files(hyp.c_str(), refs, 1, ACSUM_ROUGE_F1, 0, &out) == ACSUM_OK);
  json j = json::parse(take(out));
  CHECK(j["r1"]["f"].get<double>() == 1.0);
  CHECK(j["r2"]["f"].get<double>() == 1.0);
  CHECK(j["rl"]["f"].get<double>() == 1.0);

  const char* two[] = {r2.c_str(), r.c_str()};
  REQUIRE(acsum_evaluate_files(hyp.c_str(), two, 2, ACSUM_ROUGE_RECALL, 0, &out) == ACSUM_OK);
  j = json::parse(take(out));
  CHECK(j["r1"]["r"].get<double>() == 1.0);

  const char* mismatch[] = {s.c_str()};
  CHECK(acsum_evaluate_files(hyp.c_str(), mismatch, 1, ACSUM_ROUGE_F1, 0, &out) ==
        ACSUM_ERR_INVALID_ARGUMENT);
  const std::string missing = (dir.path / "missing").string();
  const char* none[] = {missing.c_str()};
  CHECK(acsum_evaluate_files(hyp.c_str(), none, 1, ACSUM_ROUGE_F1, 0, &out) == ACSUM_ERR_IO);
  CHECK(acsum_evaluate_files(hyp.c_str(), refs, 0, ACSUM_ROUGE_F1, 0, &out) ==
        ACSUM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("gradient check passes, detects corrupted rules and is deterministic") {
  char* out = nullptr;
  int passed = 0;
  REQUIRE(acsum_gradcheck(nullptr, 4, 1e-4, &out, &passed) == ACSUM_OK);
  const std::string first = take(out);
  CHECK(passed == 1);
  const json j = json::parse(first);
  CHECK(j["checks"].size() == 3);
  REQUIRE(acsum_gradcheck(nullptr, 4, 1e-4, &out, &passed) == ACSUM_OK);
  CHECK(take(out) == first);

  REQUIRE(acsum_debug_corrupt_backward("sigmoid") == ACSUM_OK);
  REQUIRE(acsum_gradcheck(nullptr, 4, 1e-4, &out, &passed) == ACSUM_OK);
  const json bad = json::parse(take(out));
  REQUIRE(acsum_debug_corrupt_backward(nullptr) == ACSUM_OK);
  CHECK(passed == 0);
  CHECK(bad["passed"].get<bool>() == false);
  CHECK(bad["checks"][0]["offenders"].size() > 0);
}
