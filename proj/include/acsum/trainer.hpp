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

// Alternating actor-critic training: MLE pre-training of the actor, then
// epochs in which every iteration updates the actor twice (once from the
// NLL critic, once by policy gradient against the discriminator) and every
// K3-th iteration first refreshes the discriminator.

#ifndef ACSUM_TRAINER_HPP_
#define ACSUM_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "acsum/corpus.hpp"
#include "acsum/model.hpp"
#include "acsum/optimizer.hpp"
#include "acsum/random.hpp"
#include "acsum/rouge.hpp"

namespace acsum::train {

struct TrainConfig {
  // Schedule.
  std::size_t k1 = 5;   // pre-training epochs
  std::size_t k2 = 2;   // alternating epochs
  std::size_t k3 = 50;  // discriminator update period, in iterations
  std::size_t epoch_passes = 1;  // passes over the training set per epoch

  // Learning rates. alpha_pretrain drives Critic I during pre-training; the
  // other three apply during the alternating epochs.
  double alpha_pretrain = 1.0;
  double alpha_1 = 0.1;
  double alpha_2 = 0.1;
  double alpha_phi = 0.1;

  double rho = 0.95;
  double eps = 1e-6;
  bool literal_sgd = false;

  // Dimensions.
  std::size_t embed_dim = 300;
  std::size_t hidden_dim = 500;
  std::size_t vocab_size = 30000;  // upper bound on k_y, reserved ids included
  std::size_t max_source_len = 100;
  std::size_t max_target_len = 50;
  std::size_t batch_size = 256;
  bool char_level = false;

  std::uint64_t seed = 1;
  double init_scale = 0.08;

  // Policy gradient.
  double reinforce_baseline = 0.0;  // 0 disables the constant baseline

  // Validation and decoding.
  bool validate = true;
  std::size_t validation_size = 0;  // 0 uses the whole validation split
  std::size_t beam_size = 10;
  bool length_normalize = false;
  std::size_t patience = 3;
  std::size_t threads = 0;  // 0 picks the hardware concurrency

  // Unknown keys are rejected.
  static TrainConfig from_json(const std::string& text);
  static TrainConfig from_file(const std::filesystem::path& path);
  std::string to_json() const;
  void validate_or_throw() const;

  OptimizerConfig optimizer() const;
  corpus::Limits limits() const { return {max_source_len, max_target_len}; }
  corpus::TokenMode token_mode() const {
    return char_level ? corpus::TokenMode::kCharacter : corpus::TokenMode::kWord;
  }
};

enum class EventKind { kActorCritic1Update, kActorCritic2Update, kCritic2Update };

std::string_view event_kind_name(EventKind kind);

struct ScheduleEvent {
  std::size_t epoch = 0;      // 1-based over the whole run
  std::size_t iteration = 0;  // 1-based within the phase
  EventKind kind = EventKind::kActorCritic1Update;
  double value = 0.0;

  // {"epoch":..,"iter":..,"kind":"..","value":..}
  std::string to_json() const;
  static ScheduleEvent from_json(const std::string& line);
  bool operator==(const ScheduleEvent&) const = default;
};

struct ValidationRecord {
  std::size_t epoch = 0;
  std::string phase;
  double nll = 0.0;
  rouge::CorpusScores scores;

  std::string to_json() const;
};

enum class Phase { kPretrain, kAlternating, kDone };

// Position in the schedule; everything needed to resume mid-epoch.
struct Cursor {
  Phase phase = Phase::kPretrain;
  std::size_t epoch = 0;       // completed epochs within the phase
  std::size_t pass = 0;        // completed passes within the epoch
  std::size_t batch = 0;       // next batch within the pass
  std::size_t pretrain_iteration = 0;
  std::size_t iteration = 0;   // alternating counter i, last completed
  double best_score = -1.0;
  std::size_t stale_epochs = 0;
  bool operator==(const Cursor&) const = default;
};

struct Dataset {
  corpus::Vocabulary vocab;
  std::vector<corpus::SummaryPair> train;
  std::vector<corpus::SummaryPair> valid;
  std::vector<std::string> valid_references;  // target text per valid pair
};

// Builds the vocabulary from the training pairs when vocab is null.
Dataset make_dataset(const TrainConfig& config, std::span<const corpus::TextPair> train,
                     std::span<const corpus::TextPair> valid,
                     const corpus::Vocabulary* vocab = nullptr);

model::Dims dims_for(const TrainConfig& config, std::size_t vocab_size);

struct TrainingState {
  TrainConfig config;
  corpus::Vocabulary vocab;
  std::unique_ptr<model::Model> model;
  Cursor cursor;
  Rng rng;  // drives policy sampling
  std::vector<ScheduleEvent> events;
};

// Directory with manifest.json, vocab.txt, events.jsonl and one raw
// little-endian float64 file per parameter and accumulator.
void save_checkpoint(const std::filesystem::path& dir, const TrainingState& state);
// Validates the manifest, shapes and file sizes before building anything.
TrainingState load_checkpoint(const std::filesystem::path& dir);

class Trainer {
 public:
  Trainer(TrainConfig config, Dataset data);
  // Resumes from a checkpoint; data must be encoded with the checkpoint's
  // vocabulary.
  Trainer(TrainingState state, Dataset data);

  // Runs the remaining pre-training epochs.
  void pretrain();
  // Runs the remaining alternating epochs.
  void alternating_train();
  void run();

  // One iteration of the current phase. Returns false once training is done.
  bool step();
  std::size_t run_iterations(std::size_t n);

  void save(const std::filesystem::path& dir) const;

  void on_event(std::function<void(const ScheduleEvent&)> sink) { event_sink_ = std::move(sink); }
  void on_validation(std::function<void(const ValidationRecord&)> sink) {
    validation_sink_ = std::move(sink);
  }
  void on_epoch_end(std::function<void(const Trainer&)> hook) { epoch_hook_ = std::move(hook); }

  // Beam-decodes the validation slice and scores it.
  ValidationRecord validate(const std::string& phase) const;
  std::vector<std::vector<corpus::TokenId>> decode(
      std::span<const corpus::SummaryPair> pairs) const;
  double mean_nll(std::span<const corpus::SummaryPair> pairs) const;

  const TrainConfig& config() const { return state_.config; }
  const Dataset& data() const { return data_; }
  model::Model& model() { return *state_.model; }
  const model::Model& model() const { return *state_.model; }
  const Cursor& cursor() const { return state_.cursor; }
  const std::vector<ScheduleEvent>& events() const { return state_.events; }
  const std::vector<ValidationRecord>& validations() const { return validations_; }
  Rng& rng() { return state_.rng; }
  std::size_t epoch_number() const;  // 1-based label of the current epoch

 private:
  const std::vector<corpus::PairBatch>& current_batches();
  void pretrain_iteration(const corpus::PairBatch& batch);
  void alternating_iteration(const corpus::PairBatch& batch);
  void finish_epoch();
  void record(EventKind kind, std::size_t iteration, double value);
  std::span<const corpus::SummaryPair> validation_slice() const;

  TrainingState state_;
  Dataset data_;
  std::vector<corpus::PairBatch> batches_;
  bool batches_valid_ = false;
  std::vector<ValidationRecord> validations_;
  std::function<void(const ScheduleEvent&)> event_sink_;
  std::function<void(const ValidationRecord&)> validation_sink_;
  std::function<void(const Trainer&)> epoch_hook_;
};

}  // namespace acsum::train

#endif  // ACSUM_TRAINER_HPP_
