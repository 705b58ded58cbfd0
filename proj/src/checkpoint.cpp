/* Copyright (c) 2026 The JointNLU Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "jointnlu/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "jointnlu/json_util.hpp"

namespace jointnlu {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

const char* representation_name(Representation r) { return r == Representation::kWords ? "words" : "characters"; }

template <typename Scalar>
constexpr const char* dtype_name() {
  return std::is_same_v<Scalar, float> ? "f32" : "f64";
}

constexpr const char* kParamPrefix = "param/";
constexpr const char* kMomentPrefix = "adam.m/";
constexpr const char* kVelocityPrefix = "adam.v/";

}  // namespace

ordered_json model_config_to_json(const ModelConfig& c, bool with_sizes) {
  ordered_json j;
  j["representation"] = representation_name(c.representation);
  auto tasks = ordered_json::array();
  for (Task t : kAllTasks) {
    if (c.tasks.has(t)) tasks.push_back(task_name(t));
  }
  j["tasks"] = tasks;
  j["links"] = c.links;
  j["char_dim"] = c.char_dim;
  j["word_dim"] = c.word_dim;
  j["context_dim"] = c.context_dim;
  auto filters = ordered_json::array();
  for (const auto& f : c.char_filters) filters.push_back({f.width, f.channels});
  j["char_filters"] = filters;
  j["context_layers"] = c.context_layers;
  j["context_width"] = c.context_width;
  j["max_length"] = c.max_length;
  j["task_weights"] = {{"domain", c.domain_weight}, {"intent", c.intent_weight}, {"slot", c.slot_weight}};
  j["precision"] = c.precision == Precision::kFloat ? "float" : "double";
  j["unk_word_rate"] = c.unk_word_rate;
  if (with_sizes) {
    j["vocabulary_sizes"] = {{"chars", c.char_vocab},
                             {"words", c.word_vocab},
                             {"domains", c.domain_classes},
                             {"intents", c.intent_classes},
                             {"slots", c.slot_classes}};
  }
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  StrictObject o(j, "model");
  ModelConfig c;
  std::string rep = representation_name(c.representation);
  o.read("representation", rep);
  if (rep == "characters") {
    c.representation = Representation::kCharacters;
  } else if (rep == "words") {
    c.representation = Representation::kWords;
  } else {
    throw ValidationError("model.representation: expected 'characters' or 'words', got '" + rep + "'");
  }
  std::vector<std::string> tasks;
  if (o.read("tasks", tasks)) {
    c.tasks = {false, false, false};
    for (const auto& t : tasks) {
      if (t == "domain") {
        c.tasks.domain = true;
      } else if (t == "intent") {
        c.tasks.intent = true;
      } else if (t == "slot") {
        c.tasks.slot = true;
      } else {
        throw ValidationError("model.tasks: unknown task '" + t + "'");
      }
    }
  }
  o.read("links", c.links);
  o.read("char_dim", c.char_dim);
  o.read("word_dim", c.word_dim);
  o.read("context_dim", c.context_dim);
  std::vector<std::array<Index, 2>> filters;
  if (o.read("char_filters", filters)) {
    c.char_filters.clear();
    for (const auto& f : filters) c.char_filters.push_back({f[0], f[1]});
  }
  o.read("context_layers", c.context_layers);
  o.read("context_width", c.context_width);
  o.read("max_length", c.max_length);
  if (const auto* w = o.child("task_weights")) {
    StrictObject wo(*w, o.path("task_weights"));
    wo.read("domain", c.domain_weight);
    wo.read("intent", c.intent_weight);
    wo.read("slot", c.slot_weight);
    wo.finish();
  }
  std::string precision = "double";
  o.read("precision", precision);
  if (precision == "double") {
    c.precision = Precision::kDouble;
  } else if (precision == "float") {
    c.precision = Precision::kFloat;
  } else {
    throw ValidationError("model.precision: expected 'double' or 'float', got '" + precision + "'");
  }
  o.read("unk_word_rate", c.unk_word_rate);
  if (const auto* s = o.child("vocabulary_sizes")) {
    StrictObject so(*s, o.path("vocabulary_sizes"));
    so.read("chars", c.char_vocab);
    so.read("words", c.word_vocab);
    so.read("domains", c.domain_classes);
    so.read("intents", c.intent_classes);
    so.read("slots", c.slot_classes);
    so.finish();
  }
  o.finish();
  return c;
}

ordered_json adam_config_to_json(const AdamConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

AdamConfig adam_config_from_json(const json& j) {
  StrictObject o(j, "adam");
  AdamConfig c;
  o.read("learning_rate", c.learning_rate);
  o.read("beta1", c.beta1);
  o.read("beta2", c.beta2);
  o.read("epsilon", c.epsilon);
  o.finish();
  if (!(c.learning_rate > 0) || !(c.beta1 >= 0 && c.beta1 < 1) || !(c.beta2 >= 0 && c.beta2 < 1) ||
      !(c.epsilon > 0)) {
    throw ValidationError("adam: hyperparameters out of range");
  }
  return c;
}

template <typename Scalar>
void save_checkpoint(const fs::path& path, const CheckpointContents<Scalar>& contents) {
  if (!contents.model || !contents.vocab) throw ValidationError("save_checkpoint: model and vocabularies required");
  struct Blob {
    std::string name;
    Shape shape;
    std::span<const Scalar> data;
  };
  std::vector<Blob> blobs;
  for (const auto& p : contents.model->parameters().all()) {
    blobs.push_back({kParamPrefix + p.name, p.tensor.shape(), p.tensor.data()});
  }
  ordered_json steps = ordered_json::object();
  if (contents.adam) {
    for (const auto& [name, s] : contents.adam->moments()) {
      const Shape shape{static_cast<Index>(s.m.size())};
      blobs.push_back({kMomentPrefix + name, shape, {s.m.data(), static_cast<std::size_t>(s.m.size())}});
      blobs.push_back({kVelocityPrefix + name, shape, {s.v.data(), static_cast<std::size_t>(s.v.size())}});
      steps[name] = s.step;
    }
  }

  ordered_json header;
  header["format"] = "jointnlu-checkpoint";
  header["config"] = model_config_to_json(contents.model->config());
  header["vocabularies"] = vocabularies_to_json(*contents.vocab);
  header["links_active"] = contents.model->links_active();
  header["partial_init"] = contents.partial_init;
  if (contents.state) header["training_state"] = training_state_to_json(*contents.state);
  if (contents.adam) {
    header["adam"] = adam_config_to_json(contents.adam->config());
    header["adam_steps"] = steps;
  }
  header["run_config"] = contents.run_config;
  auto table = ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& b : blobs) {
    const std::uint64_t bytes = b.data.size() * sizeof(Scalar);
    table.push_back({{"name", b.name}, {"shape", b.shape}, {"dtype", dtype_name<Scalar>()}, {"offset", offset},
                     {"bytes", bytes}});
    offset += bytes;
  }
  header["tensors"] = table;
  const std::string text = header.dump();

  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write checkpoint " + tmp.string());
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t length = text.size();
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&length), sizeof length);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : blobs) {
      out.write(reinterpret_cast<const char*>(b.data.data()), static_cast<std::streamsize>(b.data.size_bytes()));
    }
    out.flush();
    if (!out) throw RuntimeFailure("failed writing checkpoint " + tmp.string());
  }
  fs::rename(tmp, path);
}

CheckpointHeader read_checkpoint_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  char magic[8] = {};
  std::uint32_t version = 0;
  std::uint64_t length = 0;
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw ValidationError(path.string() + " is not a checkpoint file");
  }
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  if (!in) throw ValidationError(path.string() + ": truncated checkpoint header");
  if (version != kCheckpointVersion) {
    throw ValidationError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto file_size = fs::file_size(path);
  if (length > file_size) throw ValidationError(path.string() + ": corrupt checkpoint header length");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw ValidationError(path.string() + ": truncated checkpoint header");

  CheckpointHeader h;
  json j;
  try {
    j = json::parse(text);
    h.config = model_config_from_json(j.at("config"));
    h.vocab = vocabularies_from_json(j.at("vocabularies"));
    h.partial_init = j.at("partial_init").get<bool>();
    if (j.contains("training_state")) h.state = training_state_from_json(j["training_state"]);
    if (j.contains("adam")) h.adam = adam_config_from_json(j["adam"]);
    h.run_config = j.value("run_config", json());
    for (const auto& t : j.at("tensors")) {
      h.tensors.push_back({t.at("name").get<std::string>(), t.at("shape").get<Shape>(), t.at("dtype").get<std::string>(),
                           t.at("offset").get<std::uint64_t>(), t.at("bytes").get<std::uint64_t>()});
    }
    if (j.contains("adam_steps")) h.adam_steps = j["adam_steps"].get<std::map<std::string, std::int64_t>>();
    h.links_active = j.at("links_active").get<bool>();
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  h.data_start = sizeof magic + sizeof version + sizeof length + length;
  std::uint64_t end = 0;
  for (const auto& t : h.tensors) end = std::max(end, t.offset + t.bytes);
  if (h.data_start + end > file_size) throw ValidationError(path.string() + ": truncated checkpoint data");
  return h;
}

namespace {

template <typename Scalar>
void read_blob(std::ifstream& in, const CheckpointHeader& h, const TensorRecord& rec, std::span<Scalar> out,
               const fs::path& path) {
  if (rec.dtype != dtype_name<Scalar>()) {
    throw ValidationError(path.string() + ": tensor '" + rec.name + "' is " + rec.dtype + " but the model uses " +
                          dtype_name<Scalar>());
  }
  if (rec.bytes != out.size_bytes()) {
    throw ValidationError(path.string() + ": tensor '" + rec.name + "' has the wrong size");
  }
  in.seekg(static_cast<std::streamoff>(h.data_start + rec.offset));
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(rec.bytes));
  if (!in) throw ValidationError(path.string() + ": failed reading tensor '" + rec.name + "'");
}

}  // namespace

template <typename Scalar>
void load_checkpoint_into(const fs::path& path, const CheckpointHeader& header, JointModel<Scalar>& model,
                          Adam<Scalar>* adam) {
  ModelConfig stored = header.config;
  if (!(stored == model.config())) throw ValidationError(path.string() + ": model configuration differs from checkpoint");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  std::map<std::string, const TensorRecord*> by_name;
  for (const auto& t : header.tensors) by_name[t.name] = &t;
  for (const auto& p : model.parameters().all()) {
    auto it = by_name.find(kParamPrefix + p.name);
    if (it == by_name.end()) throw ValidationError(path.string() + ": missing parameter '" + p.name + "'");
    if (it->second->shape != p.tensor.shape()) {
      throw ValidationError(path.string() + ": parameter '" + p.name + "' has shape " +
                            shape_string(it->second->shape) + ", expected " + shape_string(p.tensor.shape()));
    }
    Tensor<Scalar> t = p.tensor;
    read_blob(in, header, *it->second, t.mutable_data(), path);
  }
  if (model.config().links) model.set_links_active(header.links_active);
  if (adam) {
    adam->moments().clear();
    if (header.adam) adam->set_config(*header.adam);
    for (const auto& [name, step] : header.adam_steps) {
      auto mi = by_name.find(kMomentPrefix + name);
      auto vi = by_name.find(kVelocityPrefix + name);
      if (mi == by_name.end() || vi == by_name.end() || mi->second->shape.size() != 1) {
        throw ValidationError(path.string() + ": incomplete optimizer state for '" + name + "'");
      }
      auto& s = adam->moments()[name];
      s.step = step;
      s.m.resize(mi->second->shape[0]);
      s.v.resize(mi->second->shape[0]);
      read_blob(in, header, *mi->second, std::span<Scalar>(s.m.data(), static_cast<std::size_t>(s.m.size())), path);
      read_blob(in, header, *vi->second, std::span<Scalar>(s.v.data(), static_cast<std::size_t>(s.v.size())), path);
    }
  }
}

template <typename Scalar>
std::unique_ptr<JointModel<Scalar>> load_model(const fs::path& path, CheckpointHeader* header_out) {
  auto header = read_checkpoint_header(path);
  auto model = std::make_unique<JointModel<Scalar>>(header.config);
  load_checkpoint_into(path, header, *model);
  if (header_out) *header_out = std::move(header);
  return model;
}

template <typename Scalar>
void load_front_end(const fs::path& path, JointModel<Scalar>& model, const Vocabulary& chars) {
  const auto header = read_checkpoint_header(path);
  if (model.config().representation != Representation::kCharacters ||
      header.config.representation != Representation::kCharacters) {
    throw ValidationError(path.string() + ": front-end initialization needs character models on both sides");
  }
  const auto& stored_chars = header.vocab.chars;
  std::ifstream in(path, std::ios::binary);
  std::map<std::string, const TensorRecord*> by_name;
  for (const auto& t : header.tensors) by_name[t.name] = &t;
  for (const auto& name : model.front_parameter_names()) {
    const auto& p = model.parameters().at(name);
    auto it = by_name.find(kParamPrefix + name);
    if (it == by_name.end()) throw ValidationError(path.string() + ": missing front-end parameter '" + name + "'");
    const auto& rec = *it->second;
    if (p.kind != ParamKind::kEmbedding) {
      if (rec.shape != p.tensor.shape()) {
        throw ValidationError(path.string() + ": parameter '" + name + "' has shape " + shape_string(rec.shape) +
                              ", expected " + shape_string(p.tensor.shape()));
      }
      Tensor<Scalar> t = p.tensor;
      read_blob(in, header, rec, t.mutable_data(), path);
      continue;
    }
    // Character table [dim, V]: copy columns by symbol.
    if (rec.shape.size() != 2 || rec.shape[0] != p.tensor.rows() || rec.shape[1] != stored_chars.size()) {
      throw ValidationError(path.string() + ": character table shape does not match its vocabulary");
    }
    RowMatrix<Scalar> stored(rec.shape[0], rec.shape[1]);
    read_blob(in, header, rec, std::span<Scalar>(stored.data(), static_cast<std::size_t>(stored.size())), path);
    Tensor<Scalar> t = p.tensor;
    auto target = t.mutable_matrix();
    for (Index c = 0; c < chars.size(); ++c) {
      std::optional<Index> src;
      if (c < Vocabulary::kReserved) {
        src = c;
      } else {
        src = stored_chars.find(chars.symbol(c));
      }
      if (src) target.col(c) = stored.col(*src);
    }
  }
}

#define JOINTNLU_INSTANTIATE(S)                                                                              \
  template void save_checkpoint<S>(const fs::path&, const CheckpointContents<S>&);                          \
  template void load_checkpoint_into<S>(const fs::path&, const CheckpointHeader&, JointModel<S>&, Adam<S>*); \
  template std::unique_ptr<JointModel<S>> load_model<S>(const fs::path&, CheckpointHeader*);                \
  template void load_front_end<S>(const fs::path&, JointModel<S>&, const Vocabulary&);
JOINTNLU_INSTANTIATE(float)
JOINTNLU_INSTANTIATE(double)
#undef JOINTNLU_INSTANTIATE

}  // namespace jointnlu
