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

// acsum command-line tool. Links only the C interface.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acsum/acsum.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAbort = 3;

int report(acsum_status status, int code) {
  std::cerr << "acsum: " << acsum_status_name(status) << ": " << acsum_last_error() << "\n";
  return code;
}

// Input problems map to the usage exit code; anything else aborts.
int input_or_abort(acsum_status status) {
  switch (status) {
    case ACSUM_ERR_INVALID_ARGUMENT:
    case ACSUM_ERR_IO:
    case ACSUM_ERR_FORMAT:
      return report(status, kExitUsage);
    default:
      return report(status, kExitAbort);
  }
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::stringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

struct TrainArgs {
  std::string config, data, out, resume;
};

int run_train(const TrainArgs& a) {
  std::string text;
  if (!read_file(a.config, text)) {
    std::cerr << "acsum: cannot read config file " << a.config << "\n";
    return kExitUsage;
  }
  acsum_trainer* trainer = nullptr;
  const acsum_status st =
      a.resume.empty()
          ? acsum_trainer_create(text.c_str(), a.data.c_str(), &trainer)
          : acsum_trainer_resume(a.resume.c_str(), text.c_str(), a.data.c_str(), &trainer);
  if (st != ACSUM_OK) return report(st, kExitUsage);
  const acsum_status run = acsum_trainer_run(trainer, a.out.c_str());
  acsum_trainer_free(trainer);
  if (run != ACSUM_OK) return report(run, kExitAbort);
  return kExitOk;
}

struct GenerateArgs {
  std::string model, input;
  std::size_t beam = 10;
  std::size_t max_len = 0;
};

int run_generate(const GenerateArgs& a) {
  std::string text;
  if (!read_file(a.input, text)) {
    std::cerr << "acsum: cannot read input file " << a.input << "\n";
    return kExitUsage;
  }
  acsum_model* model = nullptr;
  acsum_status st = acsum_model_load(a.model.c_str(), &model);
  if (st != ACSUM_OK) return report(st, kExitUsage);
  char* out = nullptr;
  st = acsum_model_generate(model, text.c_str(), a.beam, a.max_len, &out);
  acsum_model_free(model);
  if (st != ACSUM_OK) return input_or_abort(st);
  std::fwrite(out, 1, std::char_traits<char>::length(out), stdout);
  acsum_string_free(out);
  return kExitOk;
}

struct EvaluateArgs {
  std::string hyp;
  std::vector<std::string> refs;
  std::string mode = "f1";
  std::size_t byte_limit = 0;
};

int run_evaluate(const EvaluateArgs& a) {
  std::vector<const char*> refs;
  for (const auto& r : a.refs) refs.push_back(r.c_str());
  char* out = nullptr;
  const acsum_rouge_mode mode = a.mode == "recall" ? ACSUM_ROUGE_RECALL : ACSUM_ROUGE_F1;
  const acsum_status st =
      acsum_evaluate_files(a.hyp.c_str(), refs.data(), refs.size(), mode, a.byte_limit, &out);
  if (st != ACSUM_OK) return input_or_abort(st);
  std::cout << out << "\n";
  acsum_string_free(out);
  return kExitOk;
}

struct GradcheckArgs {
  std::string config;
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
};

int run_gradcheck(const GradcheckArgs& a) {
  std::string text;
  if (!a.config.empty() && !read_file(a.config, text)) {
    std::cerr << "acsum: cannot read config file " << a.config << "\n";
    return kExitUsage;
  }
  char* out = nullptr;
  int passed = 0;
  const acsum_status st =
      acsum_gradcheck(text.empty() ? nullptr : text.c_str(), a.seed, a.tolerance, &out, &passed);
  if (st != ACSUM_OK) return input_or_abort(st);
  std::cout << out << "\n";
  acsum_string_free(out);
  if (!passed) {
    std::cerr << "acsum: gradient check failed at tolerance " << a.tolerance << "\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

struct SynthArgs {
  std::string task, out;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  double target_noise = 0.0;
};

int run_synth(const SynthArgs& a) {
  const acsum_status st = acsum_synth(a.task.c_str(), a.count, a.seed, a.target_noise, a.out.c_str());
  if (st != ACSUM_OK) return input_or_abort(st);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* op = std::getenv("ACSUM_CORRUPT_BACKWARD"); op && *op) {
    if (acsum_debug_corrupt_backward(op) != ACSUM_OK) {
      std::cerr << "acsum: " << acsum_last_error() << "\n";
      return kExitUsage;
    }
  }

  CLI::App app{"Actor-critic abstractive summarization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", acsum_version());

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Pre-train and alternately train a model");
  train_cmd->add_option("--config", train.config, "JSON training config")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--data", train.data, "Directory with train.src/train.tgt")
      ->required()
      ->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--resume", train.resume, "Checkpoint to resume from")
      ->check(CLI::ExistingDirectory);

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Summarize one input per line");
  gen_cmd->add_option("--model", gen.model, "Checkpoint directory")->required();
  gen_cmd->add_option("--input", gen.input, "Input text file")->required();
  gen_cmd->add_option("--beam", gen.beam, "Beam size")->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--max-len", gen.max_len, "Maximum summary length (0: from checkpoint)")
      ->capture_default_str();

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score hypotheses with ROUGE-1/2/L");
  eval_cmd->add_option("--hyp", eval.hyp, "Hypothesis file")->required();
  eval_cmd->add_option("--ref", eval.refs, "Reference file (repeatable)")->required();
  eval_cmd->add_option("--mode", eval.mode, "f1 or recall")
      ->capture_default_str()
      ->check(CLI::IsMember({"f1", "recall"}));
  eval_cmd->add_option("--byte-limit", eval.byte_limit, "Truncate texts to N bytes first");

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gc_cmd->add_option("--config", gc.config, "JSON config (dimensions are shrunk)")
      ->check(CLI::ExistingFile);
  gc_cmd->add_option("--seed", gc.seed, "Seed")->capture_default_str();
  gc_cmd->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus");
  synth_cmd->add_option("--task", synth.task, "copy, reverse or noisy-headline")->required();
  synth_cmd->add_option("--count", synth.count, "Number of pairs")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--target-noise", synth.target_noise,
                        "Chance that a '#' run leaks into a noisy-headline training target")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*train_cmd) return run_train(train);
  if (*gen_cmd) return run_generate(gen);
  if (*eval_cmd) return run_evaluate(eval);
  if (*gc_cmd) return run_gradcheck(gc);
  if (*synth_cmd) return run_synth(synth);
  return kExitUsage;
}
