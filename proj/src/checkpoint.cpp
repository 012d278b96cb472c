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

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "acsum/error.hpp"
#include "acsum/trainer.hpp"
#include "json.hpp"

namespace acsum::train {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "acsum-checkpoint";
constexpr int kSchemaVersion = 1;

std::string phase_name(Phase p) {
  switch (p) {
    case Phase::kPretrain: return "pretrain";
    case Phase::kAlternating: return "alternating";
    case Phase::kDone: return "done";
  }
  return "unknown";
}

Phase parse_phase(const std::string& s) {
  if (s == "pretrain") return Phase::kPretrain;
  if (s == "alternating") return Phase::kAlternating;
  if (s == "done") return Phase::kDone;
  fail(ErrorKind::kFormat, "checkpoint: unknown phase '" + s + "'");
}

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xFF) << (8 * (7 - i));
  return out;
}

void write_array(const std::filesystem::path& path, const ad::Array& a) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  for (double v : a.data) {
    const std::uint64_t word = to_little(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&word), sizeof(word));
  }
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

std::vector<double> read_array(const std::filesystem::path& path, std::size_t count) {
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(path, ec);
  if (ec) fail(ErrorKind::kFormat, "checkpoint: missing file " + path.string());
  if (bytes != count * sizeof(double)) {
    fail(ErrorKind::kFormat, "checkpoint: " + path.string() + " holds " + std::to_string(bytes) +
                                 " bytes, expected " + std::to_string(count * sizeof(double)));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read " + path.string());
  std::vector<double> out(count);
  for (double& v : out) {
    std::uint64_t word = 0;
    in.read(reinterpret_cast<char*>(&word), sizeof(word));
    v = std::bit_cast<double>(to_little(word));
  }
  if (!in) fail(ErrorKind::kIo, "failed reading " + path.string());
  return out;
}

json cursor_json(const Cursor& c) {
  return json{{"phase", phase_name(c.phase)},
              {"epoch", c.epoch},
              {"pass", c.pass},
              {"batch", c.batch},
              {"pretrain_iteration", c.pretrain_iteration},
              {"iteration", c.iteration},
              {"best_score", c.best_score},
              {"stale_epochs", c.stale_epochs}};
}

Cursor cursor_from(const json& j) {
  Cursor c;
  c.phase = parse_phase(j.at("phase").get<std::string>());
  c.epoch = j.at("epoch").get<std::size_t>();
  c.pass = j.at("pass").get<std::size_t>();
  c.batch = j.at("batch").get<std::size_t>();
  c.pretrain_iteration = j.at("pretrain_iteration").get<std::size_t>();
  c.iteration = j.at("iteration").get<std::size_t>();
  c.best_score = j.at("best_score").get<double>();
  c.stale_epochs = j.at("stale_epochs").get<std::size_t>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const TrainingState& state) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "params", ec);
  if (ec) fail(ErrorKind::kIo, "cannot create checkpoint directory " + dir.string());

  json entries = json::array();
  for (const auto& [name, p] : state.model->store()) {
    const std::string stem = "params/" + name;
    write_array(dir / (stem + ".value.bin"), p.value);
    write_array(dir / (stem + ".sq_grad.bin"), p.first_moment);
    write_array(dir / (stem + ".sq_delta.bin"), p.second_moment);
    entries.push_back({{"name", name},
                       {"shape", p.value.shape},
                       {"value", stem + ".value.bin"},
                       {"sq_grad", stem + ".sq_grad.bin"},
                       {"sq_delta", stem + ".sq_delta.bin"}});
  }
  state.vocab.save(dir / "vocab.txt");
  {
    std::ofstream ev(dir / "events.jsonl", std::ios::binary | std::ios::trunc);
    if (!ev) fail(ErrorKind::kIo, "cannot write " + (dir / "events.jsonl").string());
    for (const ScheduleEvent& e : state.events) ev << e.to_json() << '\n';
  }
  json manifest{{"format", kFormatName},
                {"schema_version", kSchemaVersion},
                {"scalar_type", "float64"},
                {"byte_order", "little"},
                {"config", json::parse(state.config.to_json())},
                {"vocab_file", "vocab.txt"},
                {"vocab_size", state.vocab.size()},
                {"events_file", "events.jsonl"},
                {"event_count", state.events.size()},
                {"rng_state", state.rng.state()},
                {"cursor", cursor_json(state.cursor)},
                {"parameters", entries}};
  // The manifest goes last so an interrupted save never looks complete.
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  if (!out) fail(ErrorKind::kIo, "failed writing " + (dir / "manifest.json").string());
}

TrainingState load_checkpoint(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) fail(ErrorKind::kFormat, "checkpoint: cannot open " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("checkpoint: corrupt manifest: ") + e.what());
  }

  try {
    if (manifest.at("format").get<std::string>() != kFormatName) {
      fail(ErrorKind::kFormat, "checkpoint: not an acsum checkpoint");
    }
    const int version = manifest.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      fail(ErrorKind::kFormat, "checkpoint: unsupported schema version " + std::to_string(version));
    }
    if (manifest.at("scalar_type").get<std::string>() != "float64" ||
        manifest.at("byte_order").get<std::string>() != "little") {
      fail(ErrorKind::kFormat, "checkpoint: unsupported scalar type or byte order");
    }

    TrainingState state;
    state.config = TrainConfig::from_json(manifest.at("config").dump());
    state.vocab = corpus::Vocabulary::load(dir / manifest.at("vocab_file").get<std::string>());
    if (state.vocab.size() != manifest.at("vocab_size").get<std::size_t>()) {
      fail(ErrorKind::kFormat, "checkpoint: vocabulary size does not match the manifest");
    }
    auto model = std::make_unique<model::Model>(dims_for(state.config, state.vocab.size()));

    struct Loaded {
      ad::Parameter* target;
      std::vector<double> value, sq_grad, sq_delta;
    };
    std::vector<Loaded> loaded;
    std::set<std::string> seen;
    for (const json& e : manifest.at("parameters")) {
      const std::string name = e.at("name").get<std::string>();
      if (!model->store().contains(name)) {
        fail(ErrorKind::kFormat, "checkpoint: unexpected parameter " + name);
      }
      ad::Parameter& p = model->store().get(name);
      const ad::Shape shape = e.at("shape").get<ad::Shape>();
      if (shape != p.value.shape) {
        fail(ErrorKind::kFormat, "checkpoint: parameter " + name + " has shape " +
                                     ad::shape_string(shape) + ", model expects " +
                                     ad::shape_string(p.value.shape));
      }
      if (!seen.insert(name).second) fail(ErrorKind::kFormat, "checkpoint: duplicate parameter " + name);
      const std::size_t n = p.value.size();
      loaded.push_back({&p, read_array(dir / e.at("value").get<std::string>(), n),
                        read_array(dir / e.at("sq_grad").get<std::string>(), n),
                        read_array(dir / e.at("sq_delta").get<std::string>(), n)});
    }
    if (seen.size() != model->store().size()) {
      fail(ErrorKind::kFormat, "checkpoint: " + std::to_string(model->store().size() - seen.size()) +
                                   " model parameters missing from the manifest");
    }

    std::vector<ScheduleEvent> events;
    {
      std::ifstream ev(dir / manifest.at("events_file").get<std::string>(), std::ios::binary);
      if (!ev) fail(ErrorKind::kFormat, "checkpoint: missing event log");
      std::string line;
      while (std::getline(ev, line)) {
        if (!line.empty()) events.push_back(ScheduleEvent::from_json(line));
      }
    }
    if (events.size() != manifest.at("event_count").get<std::size_t>()) {
      fail(ErrorKind::kFormat, "checkpoint: event log length does not match the manifest");
    }
    const Cursor cursor = cursor_from(manifest.at("cursor"));
    Rng rng;
    rng.set_state(manifest.at("rng_state").get<std::string>());

    for (Loaded& l : loaded) {
      l.target->value.data = std::move(l.value);
      l.target->first_moment.data = std::move(l.sq_grad);
      l.target->second_moment.data = std::move(l.sq_delta);
    }
    state.model = std::move(model);
    state.cursor = cursor;
    state.rng = rng;
    state.events = std::move(events);
    return state;
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("checkpoint: malformed manifest: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kFormat || e.kind() == ErrorKind::kIo) throw;
    fail(ErrorKind::kFormat, std::string("checkpoint: ") + e.what());
  }
}

}  // namespace acsum::train
