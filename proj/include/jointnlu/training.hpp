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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jointnlu/data.hpp"
#include "jointnlu/eval.hpp"
#include "jointnlu/model.hpp"
#include "jointnlu/optim.hpp"

namespace jointnlu {

// Link layers stay off for phase1_epochs, then get fresh weights and train
// for phase2_epochs. Models built without links simply train for the total.
struct TrainingSchedule {
  int phase1_epochs = 20;
  int phase2_epochs = 30;
  Index batch_size = 32;
  std::uint64_t seed = 1;
  // Epochs without a validation improvement before stopping; 0 never stops.
  int patience = 0;
  AdamConfig adam;

  int total_epochs() const { return phase1_epochs + phase2_epochs; }
  void validate() const;
  bool operator==(const TrainingSchedule&) const = default;
};

struct TrainingState {
  int epoch = 0;  // completed epochs
  std::int64_t step = 0;
  bool links_active = false;
  bool links_initialized = false;
  double best_metric = -1.0;
  int best_epoch = 0;
  int stale_epochs = 0;
  bool stopped_early = false;

  bool operator==(const TrainingState&) const = default;
};

nlohmann::ordered_json training_state_to_json(const TrainingState& s);
TrainingState training_state_from_json(const nlohmann::json& j);

struct TaskSummary {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double headline_f1 = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  int phase = 1;
  bool links_active = false;
  std::int64_t step = 0;
  double train_loss = 0.0;
  std::map<std::string, double> train_task_loss;
  std::map<std::string, TaskSummary> validation;
  double validation_mean_f1 = 0.0;
  // First epoch with links only: validation scores taken right after the
  // fresh link weights were installed, before any update of this epoch.
  std::map<std::string, TaskSummary> link_start_validation;

  nlohmann::ordered_json to_json() const;
  static EpochRecord from_json(const nlohmann::json& j);
};

// Forward-only predictions for a corpus, in order.
template <typename Scalar>
std::vector<Prediction> predict_corpus(const JointModel<Scalar>& model, const Vocabularies& vocab,
                                       const std::vector<Utterance>& utterances, Index batch_size = 64);

// Scores the active tasks. Labels unknown to the vocabularies are rejected.
template <typename Scalar>
MetricsReport evaluate_model(const JointModel<Scalar>& model, const Vocabularies& vocab,
                             const std::vector<Utterance>& utterances, Index batch_size = 64);

std::string corpus_fingerprint(const std::vector<Utterance>& utterances);

struct TrainOptions {
  // Directory for epochs.jsonl, last.ckpt (resumable) and model.ckpt (best
  // validation epoch). Empty keeps everything in memory.
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;
  // Stop after this many epochs in this call, as if interrupted.
  std::optional<int> stop_after_epoch;
  // Restore the best-validation weights when training ends.
  bool restore_best = true;
  nlohmann::json run_config;  // archived inside checkpoints
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  TrainingState state;
};

template <typename Scalar>
class Trainer {
 public:
  Trainer(JointModel<Scalar>& model, const Vocabularies& vocab, TrainingSchedule schedule);

  TrainResult train(const std::vector<Utterance>& train, const std::vector<Utterance>& valid,
                    const TrainOptions& options = {});

  const Adam<Scalar>& optimizer() const { return adam_; }
  const TrainingState& state() const { return state_; }

 private:
  void begin_epoch(int epoch);
  double run_epoch(int epoch, const std::vector<Utterance>& train, std::map<std::string, double>& task_loss);
  std::set<std::string> frozen_parameters() const;

  JointModel<Scalar>& model_;
  const Vocabularies& vocab_;
  TrainingSchedule schedule_;
  Adam<Scalar> adam_;
  TrainingState state_;
};

// ---------------------------------------------------------------- distillation

// Pre-trained word vectors; column i of `vectors` belongs to words[i].
struct EmbeddingTable {
  std::vector<std::string> words;
  RowMatrix<double> vectors;  // [dim, count]

  Index dim() const { return vectors.rows(); }
  Index size() const { return vectors.cols(); }
};

// Text layout: "<count> <dim>" on the first line, then one word per line
// followed by dim numbers.
EmbeddingTable read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

struct DistillOptions {
  int epochs = 100;
  Index batch_size = 32;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  std::uint64_t seed = 1;
};

struct DistillResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double mean_cosine = 0.0;
  std::vector<double> epoch_loss;
};

// Fits the character front end (embeddings, CompCNN, projection, first
// highway) so composed vectors match the table under the mean squared L2
// distance. No other parameter is touched.
template <typename Scalar>
DistillResult distill_embeddings(JointModel<Scalar>& model, const Vocabulary& chars, const EmbeddingTable& table,
                                 const DistillOptions& options);

// [word_dim, words.size()] front-end vectors, computed without a tape.
template <typename Scalar>
RowMatrix<Scalar> composed_vectors(const JointModel<Scalar>& model, const Vocabulary& chars,
                                   const std::vector<std::string>& words);

// Mean and per-word cosine similarity between composed and target vectors.
template <typename Scalar>
double composed_cosine(const JointModel<Scalar>& model, const Vocabulary& chars, const EmbeddingTable& table,
                       std::vector<double>* per_word = nullptr);

PackedWords pack_words(const std::vector<std::string>& words, const Vocabulary& chars, Index min_width);

}  // namespace jointnlu
