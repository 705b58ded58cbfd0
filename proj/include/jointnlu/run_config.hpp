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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "jointnlu/eval.hpp"
#include "jointnlu/model.hpp"
#include "jointnlu/training.hpp"

namespace jointnlu {

struct DataPaths {
  std::filesystem::path train;
  std::filesystem::path valid;  // optional; empty disables validation
  std::filesystem::path test;   // optional; scored after training
  // Deterministic subsample of the training split, drawn with the run seed.
  std::optional<Index> train_size;
};

struct DistillSettings {
  std::filesystem::path embeddings;
  int epochs = 100;
  Index batch_size = 32;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
};

// Everything a command needs to reproduce a run. Relative paths resolve
// against the directory of the config file.
struct RunConfig {
  std::string variant;  // label in comparison tables; derived when empty
  ModelConfig model;
  TrainingSchedule schedule;
  DataPaths data;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "run";
  // Partial initialization from a distilled checkpoint.
  std::optional<std::filesystem::path> init_checkpoint;
  std::optional<DistillSettings> distill;
  Index eval_batch_size = 64;

  // Applies the single run seed to the schedule.
  void set_seed(std::uint64_t s);
  std::string variant_label() const;
  nlohmann::ordered_json to_json() const;
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Keeps `count` utterances chosen by the seed, in their original order.
std::vector<Utterance> subsample(const std::vector<Utterance>& corpus, Index count, std::uint64_t seed);

// Exclusive ownership of a run directory for the lifetime of the object.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

struct TrainRunOptions {
  bool resume = false;
  std::ostream* progress = nullptr;
};

struct TrainRunOutcome {
  std::vector<EpochRecord> log;
  std::optional<MetricsReport> test;
  std::optional<RunResult> result;
  std::filesystem::path checkpoint;
};

// Trains per the config and writes into out_dir: config.json, epochs.jsonl,
// last.ckpt, model.ckpt and, with a test split, test_metrics.json and
// result.json.
TrainRunOutcome run_training(const RunConfig& config, const TrainRunOptions& options = {});

struct DistillRunOutcome {
  DistillResult result;
  std::filesystem::path checkpoint;
};

// Fits the front end to config.distill.embeddings and saves a partial-init
// checkpoint (distilled.ckpt) into out_dir.
DistillRunOutcome run_distillation(const RunConfig& config, std::ostream* progress = nullptr);

// Scores a checkpoint on a corpus file.
MetricsReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::filesystem::path& corpus,
                                  Index batch_size = 64);

}  // namespace jointnlu
