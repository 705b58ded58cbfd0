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

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jointnlu/data.hpp"
#include "jointnlu/model.hpp"
#include "jointnlu/optim.hpp"
#include "jointnlu/training.hpp"

namespace jointnlu {

// Container layout: 8-byte magic "JNLUCKPT", u32 format version, u64 header
// length, a JSON header, then raw little-endian tensor data at the offsets the
// header lists. Tensors round-trip bit-exactly.
inline constexpr char kCheckpointMagic[8] = {'J', 'N', 'L', 'U', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  Shape shape;
  std::string dtype;  // "f32" or "f64"
  std::uint64_t offset = 0;
  std::uint64_t bytes = 0;
};

struct CheckpointHeader {
  ModelConfig config;
  Vocabularies vocab;
  std::optional<TrainingState> state;
  std::optional<AdamConfig> adam;
  std::map<std::string, std::int64_t> adam_steps;
  bool links_active = false;
  bool partial_init = false;
  nlohmann::json run_config;
  std::vector<TensorRecord> tensors;
  std::uint64_t data_start = 0;
};

template <typename Scalar>
struct CheckpointContents {
  const JointModel<Scalar>* model = nullptr;
  const Vocabularies* vocab = nullptr;
  const Adam<Scalar>* adam = nullptr;  // optimizer moments, for resuming
  std::optional<TrainingState> state;
  bool partial_init = false;
  nlohmann::json run_config;
};

// Writes to a temporary file and renames it into place.
template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const CheckpointContents<Scalar>& contents);

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

// Copies stored parameters (and optimizer moments when `adam` is given) into
// an existing model with the same configuration.
template <typename Scalar>
void load_checkpoint_into(const std::filesystem::path& path, const CheckpointHeader& header, JointModel<Scalar>& model,
                          Adam<Scalar>* adam = nullptr);

template <typename Scalar>
std::unique_ptr<JointModel<Scalar>> load_model(const std::filesystem::path& path, CheckpointHeader* header = nullptr);

// Initializes the character front end of `model` from a (partial) checkpoint.
// Character embeddings are matched by symbol, so the two character
// vocabularies may differ; characters the checkpoint lacks keep their values.
template <typename Scalar>
void load_front_end(const std::filesystem::path& path, JointModel<Scalar>& model, const Vocabulary& chars);

nlohmann::ordered_json model_config_to_json(const ModelConfig& c, bool with_sizes = true);
// Strict: unknown keys are rejected. Vocabulary sizes are optional.
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json adam_config_to_json(const AdamConfig& c);
AdamConfig adam_config_from_json(const nlohmann::json& j);

}  // namespace jointnlu
