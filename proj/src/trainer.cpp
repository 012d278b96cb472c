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

#include "acsum/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "acsum/error.hpp"
#include "acsum/reinforce.hpp"
#include "json.hpp"

namespace acsum::train {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TrainConfig

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("config field '") + key + "': " + e.what());
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "k1", "k2", "k3", "epoch_passes", "alpha_pretrain", "alpha_1", "alpha_2", "alpha_phi",
      "rho", "eps", "literal_sgd", "embed_dim", "hidden_dim", "vocab_size", "max_source_len",
      "max_target_len", "batch_size", "char_level", "seed", "init_scale", "reinforce_baseline",
      "validate", "validation_size", "beam_size", "length_normalize", "patience", "threads"};
  return keys;
}

}  // namespace

TrainConfig TrainConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::kInvalidArgument, "config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known_keys().contains(key)) fail(ErrorKind::kInvalidArgument, "unknown config key: " + key);
  }
  TrainConfig c;
  read_field(j, "k1", c.k1);
  read_field(j, "k2", c.k2);
  read_field(j, "k3", c.k3);
  read_field(j, "epoch_passes", c.epoch_passes);
  read_field(j, "alpha_pretrain", c.alpha_pretrain);
  read_field(j, "alpha_1", c.alpha_1);
  read_field(j, "alpha_2", c.alpha_2);
  read_field(j, "alpha_phi", c.alpha_phi);
  read_field(j, "rho", c.rho);
  read_field(j, "eps", c.eps);
  read_field(j, "literal_sgd", c.literal_sgd);
  read_field(j, "embed_dim", c.embed_dim);
  read_field(j, "hidden_dim", c.hidden_dim);
  read_field(j, "vocab_size", c.vocab_size);
  read_field(j, "max_source_len", c.max_source_len);
  read_field(j, "max_target_len", c.max_target_len);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "char_level", c.char_level);
  read_field(j, "seed", c.seed);
  read_field(j, "init_scale", c.init_scale);
  read_field(j, "reinforce_baseline", c.reinforce_baseline);
  read_field(j, "validate", c.validate);
  read_field(j, "validation_size", c.validation_size);
  read_field(j, "beam_size", c.beam_size);
  read_field(j, "length_normalize", c.length_normalize);
  read_field(j, "patience", c.patience);
  read_field(j, "threads", c.threads);
  c.validate_or_throw();
  return c;
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kInvalidArgument, "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string TrainConfig::to_json() const {
  json j{{"k1", k1},
         {"k2", k2},
         {"k3", k3},
         {"epoch_passes", epoch_passes},
         {"alpha_pretrain", alpha_pretrain},
         {"alpha_1", alpha_1},
         {"alpha_2", alpha_2},
         {"alpha_phi", alpha_phi},
         {"rho", rho},
         {"eps", eps},
         {"literal_sgd", literal_sgd},
         {"embed_dim", embed_dim},
         {"hidden_dim", hidden_dim},
         {"vocab_size", vocab_size},
         {"max_source_len", max_source_len},
         {"max_target_len", max_target_len},
         {"batch_size", batch_size},
         {"char_level", char_level},
         {"seed", seed},
         {"init_scale", init_scale},
         {"reinforce_baseline", reinforce_baseline},
         {"validate", validate},
         {"validation_size", validation_size},
         {"beam_size", beam_size},
         {"length_normalize", length_normalize},
         {"patience", patience},
         {"threads", threads}};
  return j.dump();
}

void TrainConfig::validate_or_throw() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::kInvalidArgument, std::string("invalid config: ") + what);
  };
  check(k1 >= 1 && k2 >= 1 && k3 >= 1, "k1, k2 and k3 must be at least 1");
  check(epoch_passes >= 1, "epoch_passes must be at least 1");
  check(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  check(eps > 0.0, "eps must be positive");
  check(embed_dim >= 1 && hidden_dim >= 1, "embed_dim and hidden_dim must be at least 1");
  check(vocab_size >= corpus::kReservedCount, "vocab_size must be at least 4");
  check(max_source_len >= 1 && max_target_len >= 1, "maximum lengths must be at least 1");
  check(batch_size >= 1, "batch_size must be at least 1");
  check(beam_size >= 1, "beam_size must be at least 1");
  check(init_scale >= 0.0, "init_scale must be nonnegative");
  for (double a : {alpha_pretrain, alpha_1, alpha_2, alpha_phi}) {
    check(std::isfinite(a) && a >= 0.0, "learning rates must be finite and nonnegative");
  }
}

OptimizerConfig TrainConfig::optimizer() const {
  return {literal_sgd ? UpdateRule::kSgd : UpdateRule::kAdadelta, rho, eps};
}

// ---------------------------------------------------------------------------
// Events

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kActorCritic1Update: return "actor-critic1-update";
    case EventKind::kActorCritic2Update: return "actor-critic2-update";
    case EventKind::kCritic2Update: return "critic2-update";
  }
  return "unknown";
}

std::string ScheduleEvent::to_json() const {
  return json{{"epoch", epoch}, {"iter", iteration}, {"kind", event_kind_name(kind)}, {"value", value}}
      .dump();
}

ScheduleEvent ScheduleEvent::from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    ScheduleEvent e;
    e.epoch = j.at("epoch").get<std::size_t>();
    e.iteration = j.at("iter").get<std::size_t>();
    e.value = j.at("value").get<double>();
    const std::string kind = j.at("kind").get<std::string>();
    bool matched = false;
    for (EventKind k : {EventKind::kActorCritic1Update, EventKind::kActorCritic2Update,
                        EventKind::kCritic2Update}) {
      if (event_kind_name(k) == kind) {
        e.kind = k;
        matched = true;
      }
    }
    if (!matched) fail(ErrorKind::kFormat, "unknown event kind: " + kind);
    return e;
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("malformed event line: ") + e.what());
  }
}

std::string ValidationRecord::to_json() const {
  json j{{"epoch", epoch}, {"phase", phase}, {"nll", nll}, {"rouge", json::parse(scores.to_json())}};
  return j.dump();
}

// ---------------------------------------------------------------------------
// Dataset

model::Dims dims_for(const TrainConfig& config, std::size_t vocab_size) {
  return {vocab_size, config.embed_dim, config.hidden_dim};
}

Dataset make_dataset(const TrainConfig& config, std::span<const corpus::TextPair> train,
                     std::span<const corpus::TextPair> valid, const corpus::Vocabulary* vocab) {
  Dataset d;
  d.vocab = vocab ? *vocab : corpus::Vocabulary::build(train, config.vocab_size, config.token_mode());
  d.train = corpus::encode_pairs(train, d.vocab, config.limits(), config.token_mode());
  d.valid = corpus::encode_pairs(valid, d.vocab, config.limits(), config.token_mode());
  for (const corpus::TextPair& p : valid) {
    std::string ref;
    for (const std::string& t : corpus::tokenize(p.target, config.token_mode())) {
      if (!ref.empty()) ref += ' ';
      ref += t;
    }
    d.valid_references.push_back(std::move(ref));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(TrainConfig config, Dataset data) : data_(std::move(data)) {
  config.validate_or_throw();
  if (data_.train.empty()) fail(ErrorKind::kInvalidArgument, "trainer: empty training set");
  state_.config = config;
  state_.vocab = data_.vocab;
  state_.model = std::make_unique<model::Model>(dims_for(config, data_.vocab.size()));
  state_.model->initialize(derive_seed(config.seed, 1), config.init_scale);
  state_.rng = Rng(derive_seed(config.seed, 2));
}

Trainer::Trainer(TrainingState state, Dataset data) : state_(std::move(state)), data_(std::move(data)) {
  if (!(data_.vocab == state_.vocab)) {
    fail(ErrorKind::kFormat, "trainer: dataset vocabulary differs from the checkpoint vocabulary");
  }
  if (data_.train.empty()) fail(ErrorKind::kInvalidArgument, "trainer: empty training set");
}

std::size_t Trainer::epoch_number() const {
  const Cursor& c = state_.cursor;
  switch (c.phase) {
    case Phase::kPretrain: return c.epoch + 1;
    case Phase::kAlternating: return state_.config.k1 + c.epoch + 1;
    case Phase::kDone: break;
  }
  return state_.config.k1 + state_.config.k2;
}

const std::vector<corpus::PairBatch>& Trainer::current_batches() {
  if (!batches_valid_) {
    const Cursor& c = state_.cursor;
    const std::uint64_t stream = (c.phase == Phase::kPretrain ? 1000003ULL : 2000003ULL) +
                                 1000ULL * (epoch_number() * 1000ULL + c.pass);
    batches_ = corpus::make_batches(data_.train, state_.config.batch_size,
                                    derive_seed(state_.config.seed, stream));
    batches_valid_ = true;
  }
  return batches_;
}

void Trainer::record(EventKind kind, std::size_t iteration, double value) {
  ScheduleEvent e{epoch_number(), iteration, kind, value};
  state_.events.push_back(e);
  if (event_sink_) event_sink_(e);
}

void Trainer::pretrain_iteration(const corpus::PairBatch& batch) {
  model::Model& m = *state_.model;
  const std::size_t it = ++state_.cursor.pretrain_iteration;
  const double nll = model::critic1_update(m.store(), m.actor(), batch, state_.config.optimizer(),
                                           state_.config.alpha_pretrain);
  record(EventKind::kActorCritic1Update, it, nll);
}

void Trainer::alternating_iteration(const corpus::PairBatch& batch) {
  model::Model& m = *state_.model;
  const TrainConfig& cfg = state_.config;
  const OptimizerConfig opt = cfg.optimizer();
  const std::size_t i = ++state_.cursor.iteration;

  std::vector<corpus::TokenSequence> sources;
  std::vector<corpus::SummaryPair> positives;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    positives.push_back(batch.row(r));
    sources.push_back(positives.back().source);
  }

  if (i % cfg.k3 == 0) {
    std::vector<corpus::SummaryPair> negatives;
    for (const corpus::TokenSequence& src : sources) {
      model::Sample s = model::sample_sequence(src, m.actor(), cfg.max_target_len, state_.rng);
      negatives.push_back({src, std::move(s.tokens)});
    }
    const double j = model::critic2_update(m.store(), m.actor(), m.critic(), positives, negatives,
                                           opt, cfg.alpha_phi);
    record(EventKind::kCritic2Update, i, j);
  }

  const double nll = model::critic1_update(m.store(), m.actor(), batch, opt, cfg.alpha_1);
  record(EventKind::kActorCritic1Update, i, nll);

  const model::PolicyUpdate pg =
      model::critic2_actor_update(m.store(), m.actor(), m.critic(), sources, cfg.max_target_len,
                                  state_.rng, opt, cfg.alpha_2, cfg.reinforce_baseline);
  record(EventKind::kActorCritic2Update, i, pg.surrogate);
}

bool Trainer::step() {
  Cursor& c = state_.cursor;
  if (c.phase == Phase::kDone) return false;
  const std::vector<corpus::PairBatch>& batches = current_batches();
  const corpus::PairBatch& batch = batches.at(c.batch);
  if (c.phase == Phase::kPretrain) {
    pretrain_iteration(batch);
  } else {
    alternating_iteration(batch);
  }
  if (++c.batch == batches.size()) {
    c.batch = 0;
    batches_valid_ = false;
    if (++c.pass == state_.config.epoch_passes) {
      c.pass = 0;
      finish_epoch();
    }
  }
  return c.phase != Phase::kDone;
}

void Trainer::finish_epoch() {
  Cursor& c = state_.cursor;
  const TrainConfig& cfg = state_.config;
  std::optional<double> score;
  if (cfg.validate && !data_.valid.empty()) {
    ValidationRecord rec = validate(c.phase == Phase::kPretrain ? "pretrain" : "alternating");
    rec.epoch = epoch_number();
    score = (rec.scores.rouge1.f1 + rec.scores.rouge2.f1 + rec.scores.rougel.f1) / 3.0;
    validations_.push_back(rec);
    if (validation_sink_) validation_sink_(rec);
  }
  ++c.epoch;
  if (c.phase == Phase::kPretrain) {
    if (score) c.best_score = *score;
    if (c.epoch == cfg.k1) {
      c.phase = Phase::kAlternating;
      c.epoch = 0;
    }
  } else {
    if (score) {
      if (*score > c.best_score) {
        c.best_score = *score;
        c.stale_epochs = 0;
      } else {
        ++c.stale_epochs;
      }
    }
    if (c.epoch == cfg.k2 || (score && c.stale_epochs >= cfg.patience)) c.phase = Phase::kDone;
  }
  batches_valid_ = false;
  if (epoch_hook_) epoch_hook_(*this);
}

void Trainer::pretrain() {
  while (state_.cursor.phase == Phase::kPretrain) step();
}

void Trainer::alternating_train() {
  if (state_.cursor.phase == Phase::kPretrain) {
    fail(ErrorKind::kInvalidArgument, "alternating_train: pre-training has not completed");
  }
  while (state_.cursor.phase == Phase::kAlternating) step();
}

void Trainer::run() {
  pretrain();
  alternating_train();
}

std::size_t Trainer::run_iterations(std::size_t n) {
  std::size_t done = 0;
  while (done < n && state_.cursor.phase != Phase::kDone) {
    step();
    ++done;
  }
  return done;
}

void Trainer::save(const std::filesystem::path& dir) const { save_checkpoint(dir, state_); }

std::span<const corpus::SummaryPair> Trainer::validation_slice() const {
  const std::size_t n = state_.config.validation_size == 0
                            ? data_.valid.size()
                            : std::min(state_.config.validation_size, data_.valid.size());
  return std::span(data_.valid).first(n);
}

std::vector<std::vector<corpus::TokenId>> Trainer::decode(
    std::span<const corpus::SummaryPair> pairs) const {
  std::vector<std::vector<corpus::TokenId>> out(pairs.size());
  const model::BeamOptions opts{state_.config.beam_size, state_.config.max_target_len,
                                state_.config.length_normalize};
  const model::ActorParams& actor = state_.model->actor();
  std::size_t workers = state_.config.threads ? state_.config.threads
                                              : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(1, pairs.size()));
  auto work = [&](std::size_t start) {
    for (std::size_t i = start; i < pairs.size(); i += workers) {
      out[i] = model::strip_eos(model::beam_search(pairs[i].source, actor, opts).tokens);
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  return out;
}

double Trainer::mean_nll(std::span<const corpus::SummaryPair> pairs) const {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (const corpus::SummaryPair& p : pairs) {
    total += model::nll_value(p.source, p.target, state_.model->actor());
  }
  return total / static_cast<double>(pairs.size());
}

ValidationRecord Trainer::validate(const std::string& phase) const {
  const std::span<const corpus::SummaryPair> slice = validation_slice();
  ValidationRecord rec;
  rec.epoch = epoch_number();
  rec.phase = phase;
  rec.nll = mean_nll(slice);
  const auto decoded = decode(slice);
  std::vector<std::string> hyps;
  std::vector<std::vector<std::string>> refs;
  for (std::size_t i = 0; i < slice.size(); ++i) {
    hyps.push_back(corpus::decode(decoded[i], data_.vocab));
    refs.push_back({data_.valid_references[i]});
  }
  rec.scores = rouge::evaluate_corpus(hyps, refs);
  return rec;
}

}  // namespace acsum::train
