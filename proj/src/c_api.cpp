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

#include "acsum/acsum.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "acsum/error.hpp"
#include "acsum/gradcheck.hpp"
#include "acsum/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

struct acsum_trainer {
  std::unique_ptr<acsum::train::Trainer> trainer;
  std::vector<std::string> metrics;  // validation records, JSON per line
};

struct acsum_model {
  acsum::train::TrainingState state;
};

namespace {

thread_local std::string last_error;

acsum_status status_for(acsum::ErrorKind kind) {
  switch (kind) {
    case acsum::ErrorKind::kInvalidArgument: return ACSUM_ERR_INVALID_ARGUMENT;
    case acsum::ErrorKind::kIo: return ACSUM_ERR_IO;
    case acsum::ErrorKind::kFormat: return ACSUM_ERR_FORMAT;
    case acsum::ErrorKind::kNumerical: return ACSUM_ERR_NUMERICAL;
  }
  return ACSUM_ERR_INTERNAL;
}

template <typename Fn>
acsum_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return ACSUM_OK;
  } catch (const acsum::Error& e) {
    last_error = e.what();
    return status_for(e.kind());
  } catch (const json::exception& e) {
    last_error = std::string("malformed JSON: ") + e.what();
    return ACSUM_ERR_FORMAT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return ACSUM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return ACSUM_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) acsum::fail(acsum::ErrorKind::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

struct Corpus {
  std::vector<acsum::corpus::TextPair> train;
  std::vector<acsum::corpus::TextPair> valid;
};

Corpus read_data_dir(const fs::path& dir) {
  if (!fs::exists(dir / "train.src") || !fs::exists(dir / "train.tgt")) {
    acsum::fail(acsum::ErrorKind::kInvalidArgument,
                "data directory " + dir.string() + " lacks train.src and train.tgt");
  }
  Corpus c;
  c.train = acsum::corpus::read_parallel(dir / "train");
  if (fs::exists(dir / "valid.src") || fs::exists(dir / "valid.tgt")) {
    c.valid = acsum::corpus::read_parallel(dir / "valid");
  }
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) acsum::fail(acsum::ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) acsum::fail(acsum::ErrorKind::kIo, "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) acsum::fail(acsum::ErrorKind::kIo, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string events_jsonl(const acsum_trainer& t) {
  std::string out;
  for (const auto& e : t.trainer->events()) out += e.to_json() + "\n";
  return out;
}

std::string metrics_jsonl(const acsum_trainer& t) {
  std::string out;
  for (const auto& m : t.metrics) out += m + "\n";
  return out;
}

void attach_sinks(acsum_trainer& t) {
  t.trainer->on_validation(
      [&t](const acsum::train::ValidationRecord& r) { t.metrics.push_back(r.to_json()); });
}

// A checkpoint directory also carries the validation log so that a resumed run
// reports the same metrics as an uninterrupted one.
void save_with_metrics(const acsum_trainer& t, const fs::path& dir) {
  t.trainer->save(dir);
  write_text(dir / "metrics.jsonl", metrics_jsonl(t));
}

std::string format_decoded(const acsum::corpus::TokenSequence& tokens,
                           const acsum::corpus::Vocabulary& vocab) {
  return acsum::corpus::decode(tokens, vocab);
}

}  // namespace

extern "C" {

const char* acsum_last_error(void) { return last_error.c_str(); }

const char* acsum_status_name(acsum_status status) {
  switch (status) {
    case ACSUM_OK: return "ok";
    case ACSUM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case ACSUM_ERR_IO: return "i/o error";
    case ACSUM_ERR_FORMAT: return "format error";
    case ACSUM_ERR_NUMERICAL: return "numerical error";
    case ACSUM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* acsum_version(void) { return "0.1.0"; }

void acsum_string_free(char* s) { std::free(s); }

acsum_status acsum_trainer_create(const char* config_json, const char* data_dir,
                                  acsum_trainer** out) {
  return guarded([&] {
    require(config_json && data_dir && out, "acsum_trainer_create: null argument");
    *out = nullptr;
    const auto config = acsum::train::TrainConfig::from_json(config_json);
    const Corpus corpus = read_data_dir(data_dir);
    auto data = acsum::train::make_dataset(config, corpus.train, corpus.valid);
    auto t = std::make_unique<acsum_trainer>();
    t->trainer = std::make_unique<acsum::train::Trainer>(config, std::move(data));
    attach_sinks(*t);
    *out = t.release();
  });
}

acsum_status acsum_trainer_resume(const char* checkpoint_dir, const char* config_json,
                                  const char* data_dir, acsum_trainer** out) {
  return guarded([&] {
    require(checkpoint_dir && data_dir && out, "acsum_trainer_resume: null argument");
    *out = nullptr;
    auto state = acsum::train::load_checkpoint(checkpoint_dir);
    if (config_json &&
        acsum::train::TrainConfig::from_json(config_json).to_json() != state.config.to_json()) {
      acsum::fail(acsum::ErrorKind::kInvalidArgument,
                  "resume: config differs from the checkpoint's config");
    }
    const Corpus corpus = read_data_dir(data_dir);
    auto data = acsum::train::make_dataset(state.config, corpus.train, corpus.valid, &state.vocab);
    auto t = std::make_unique<acsum_trainer>();
    const fs::path metrics = fs::path(checkpoint_dir) / "metrics.jsonl";
    if (fs::exists(metrics)) {
      for (std::string& line : split_lines(read_text(metrics))) {
        if (!line.empty()) t->metrics.push_back(std::move(line));
      }
    }
    t->trainer = std::make_unique<acsum::train::Trainer>(std::move(state), std::move(data));
    attach_sinks(*t);
    *out = t.release();
  });
}

void acsum_trainer_free(acsum_trainer* trainer) { delete trainer; }

acsum_status acsum_trainer_run(acsum_trainer* trainer, const char* out_dir) {
  return guarded([&] {
    require(trainer && out_dir, "acsum_trainer_run: null argument");
    const fs::path out(out_dir);
    const fs::path checkpoints = out / "checkpoints";
    std::error_code ec;
    fs::create_directories(checkpoints, ec);
    if (ec) acsum::fail(acsum::ErrorKind::kIo, "cannot create " + checkpoints.string());

    const auto& cursor = trainer->trainer->cursor();
    std::size_t completed = cursor.epoch;
    if (cursor.phase != acsum::train::Phase::kPretrain) completed += trainer->trainer->config().k1;
    trainer->trainer->on_epoch_end([&](const acsum::train::Trainer&) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch-%03zu", ++completed);
      save_with_metrics(*trainer, checkpoints / name);
      save_with_metrics(*trainer, checkpoints / "last");
      write_text(out / "events.jsonl", events_jsonl(*trainer));
      write_text(out / "metrics.jsonl", metrics_jsonl(*trainer));
    });
    trainer->trainer->run();
    trainer->trainer->on_epoch_end(nullptr);
    save_with_metrics(*trainer, checkpoints / "last");
    write_text(out / "events.jsonl", events_jsonl(*trainer));
    write_text(out / "metrics.jsonl", metrics_jsonl(*trainer));
  });
}

acsum_status acsum_trainer_step(acsum_trainer* trainer, size_t n, size_t* done) {
  return guarded([&] {
    require(trainer, "acsum_trainer_step: null trainer");
    const std::size_t ran = trainer->trainer->run_iterations(n);
    if (done) *done = ran;
  });
}

acsum_status acsum_trainer_save(const acsum_trainer* trainer, const char* dir) {
  return guarded([&] {
    require(trainer && dir, "acsum_trainer_save: null argument");
    save_with_metrics(*trainer, dir);
  });
}

int acsum_trainer_finished(const acsum_trainer* trainer) {
  return trainer && trainer->trainer->cursor().phase == acsum::train::Phase::kDone ? 1 : 0;
}

acsum_status acsum_trainer_events(const acsum_trainer* trainer, char** out_jsonl) {
  return guarded([&] {
    require(trainer && out_jsonl, "acsum_trainer_events: null argument");
    *out_jsonl = dup_string(events_jsonl(*trainer));
  });
}

acsum_status acsum_trainer_metrics(const acsum_trainer* trainer, char** out_jsonl) {
  return guarded([&] {
    require(trainer && out_jsonl, "acsum_trainer_metrics: null argument");
    *out_jsonl = dup_string(metrics_jsonl(*trainer));
  });
}

acsum_status acsum_model_load(const char* checkpoint_dir, acsum_model** out) {
  return guarded([&] {
    require(checkpoint_dir && out, "acsum_model_load: null argument");
    *out = nullptr;
    auto m = std::make_unique<acsum_model>();
    m->state = acsum::train::load_checkpoint(checkpoint_dir);
    *out = m.release();
  });
}

void acsum_model_free(acsum_model* model) { delete model; }

acsum_status acsum_model_generate(const acsum_model* model, const char* input, size_t beam_size,
                                  size_t max_len, char** out) {
  return guarded([&] {
    require(model && input && out, "acsum_model_generate: null argument");
    require(beam_size >= 1, "acsum_model_generate: beam size must be at least 1");
    const auto& st = model->state;
    const auto& actor = st.model->actor();
    acsum::model::BeamOptions opts;
    opts.beam_size = beam_size;
    opts.max_len = max_len ? max_len : st.config.max_target_len;
    opts.length_normalize = st.config.length_normalize;
    std::string result;
    for (const std::string& line : split_lines(input)) {
      const auto source = acsum::corpus::encode(line, st.vocab, st.config.max_source_len, false,
                                                st.config.token_mode());
      if (!source.empty()) {
        const auto hyp = acsum::model::beam_search(source, actor, opts);
        result += format_decoded(acsum::model::strip_eos(hyp.tokens), st.vocab);
      }
      result += '\n';
    }
    *out = dup_string(result);
  });
}

acsum_status acsum_evaluate_files(const char* hyp_path, const char* const* ref_paths,
                                  size_t ref_count, acsum_rouge_mode mode, size_t byte_limit,
                                  char** out_json) {
  return guarded([&] {
    require(hyp_path && out_json, "acsum_evaluate_files: null argument");
    require(ref_paths && ref_count > 0, "acsum_evaluate_files: at least one reference is required");
    require(mode == ACSUM_ROUGE_F1 || mode == ACSUM_ROUGE_RECALL, "acsum_evaluate_files: bad mode");
    const auto hyps = acsum::corpus::read_lines(hyp_path);
    std::vector<std::vector<std::string>> refs(hyps.size());
    for (std::size_t r = 0; r < ref_count; ++r) {
      require(ref_paths[r], "acsum_evaluate_files: null reference path");
      const auto lines = acsum::corpus::read_lines(ref_paths[r]);
      if (lines.size() != hyps.size()) {
        acsum::fail(acsum::ErrorKind::kInvalidArgument,
                    std::string("reference ") + ref_paths[r] + " has " +
                        std::to_string(lines.size()) + " lines, hypotheses have " +
                        std::to_string(hyps.size()));
      }
      for (std::size_t i = 0; i < lines.size(); ++i) refs[i].push_back(lines[i]);
    }
    acsum::rouge::EvalOptions opts;
    opts.mode = mode == ACSUM_ROUGE_RECALL ? acsum::rouge::Mode::kRecall : acsum::rouge::Mode::kF1;
    if (byte_limit > 0) opts.byte_limit = byte_limit;
    *out_json = dup_string(acsum::rouge::evaluate_corpus(hyps, refs, opts).to_json());
  });
}

acsum_status acsum_gradcheck(const char* config_json, uint64_t seed, double tolerance,
                             char** out_json, int* passed) {
  return guarded([&] {
    require(out_json && passed, "acsum_gradcheck: null argument");
    acsum::train::TrainConfig cfg;
    if (config_json && *config_json) cfg = acsum::train::TrainConfig::from_json(config_json);
    const auto report = acsum::train::check_gradients(cfg, seed, tolerance);
    *passed = report.passed() ? 1 : 0;
    *out_json = dup_string(report.to_json());
  });
}

acsum_status acsum_synth(const char* task, size_t count, uint64_t seed, double target_noise,
                         const char* out_dir) {
  return guarded([&] {
    require(task && out_dir, "acsum_synth: null argument");
    require(count >= 1, "acsum_synth: count must be at least 1");
    const auto kind = acsum::corpus::parse_task(task);
    acsum::corpus::SyntheticOptions options;
    options.target_noise = target_noise;
    const auto corpus = acsum::corpus::gen_synthetic(kind, count, seed, options);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) acsum::fail(acsum::ErrorKind::kIo, std::string("cannot create ") + out_dir);
    acsum::corpus::write_parallel(fs::path(out_dir) / "train", corpus.train);
    acsum::corpus::write_parallel(fs::path(out_dir) / "valid", corpus.valid);
  });
}

acsum_status acsum_debug_corrupt_backward(const char* op_name) {
  return guarded([&] {
    if (!op_name || !*op_name) {
      acsum::ad::inject_backward_fault(std::nullopt);
      return;
    }
    const auto op = acsum::ad::op_from_name(op_name);
    if (!op) acsum::fail(acsum::ErrorKind::kInvalidArgument, std::string("unknown op ") + op_name);
    acsum::ad::inject_backward_fault(*op);
  });
}

}  // extern "C"
