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

#include <optional>
#include <string>
#include <vector>

#include "jointnlu/data.hpp"
#include "jointnlu/layers.hpp"

namespace jointnlu {

enum class Representation { kCharacters, kWords };
enum class Precision { kDouble, kFloat };
enum class Task { kDomain, kIntent, kSlot };

struct TaskSet {
  bool domain = true;
  bool intent = true;
  bool slot = true;

  bool has(Task t) const { return t == Task::kDomain ? domain : t == Task::kIntent ? intent : slot; }
  bool all() const { return domain && intent && slot; }
  bool any() const { return domain || intent || slot; }
  bool operator==(const TaskSet&) const = default;
};

const char* task_name(Task t);
inline constexpr Task kAllTasks[] = {Task::kDomain, Task::kIntent, Task::kSlot};

struct ModelConfig {
  Representation representation = Representation::kCharacters;
  TaskSet tasks;
  bool links = true;
  Index char_dim = 15;
  Index word_dim = 100;
  Index context_dim = 100;
  std::vector<CharFilter> char_filters = default_char_filters();
  Index context_layers = 2;
  Index context_width = 3;
  Index max_length = 48;
  double domain_weight = 1.0;
  double intent_weight = 1.0;
  double slot_weight = 1.0;
  Precision precision = Precision::kDouble;
  // Word mode only: fraction of training tokens replaced by UNK each epoch.
  double unk_word_rate = 0.01;

  // Vocabulary-derived extents, filled in from the training data.
  Index char_vocab = 0;
  Index word_vocab = 0;
  Index domain_classes = 0;
  Index intent_classes = 0;
  Index slot_classes = 0;

  void validate() const;
  void set_vocabulary_sizes(const Vocabularies& vocab);
  Index min_char_width() const;
  bool operator==(const ModelConfig&) const = default;
};

template <typename Scalar>
struct JointOutput {
  std::optional<Tensor<Scalar>> domain_logits;  // [domain_classes, B]
  std::optional<Tensor<Scalar>> intent_logits;  // [intent_classes, B]
  std::optional<Tensor<Scalar>> slot_logits;    // [slot_classes, T], real tokens only
  std::vector<Index> token_positions;           // batch position of each slot column
  std::vector<Index> token_utterance;           // utterance of each slot column
};

template <typename Scalar>
struct LossTerms {
  Tensor<Scalar> total;
  double domain = 0.0;
  double intent = 0.0;
  double slot = 0.0;
};

struct Prediction {
  std::optional<Index> domain;
  std::optional<Index> intent;
  std::vector<Index> slots;
  double domain_probability = 0.0;
  double intent_probability = 0.0;
  std::vector<double> slot_probabilities;
};

// The joint domain/intent/slot network and its ablations: word vectors from
// the character CompCNN (or a word embedding table) through a highway layer,
// a stacked CNN for per-word contexts, a shared max-pooled sentence vector
// for the two global heads, per-word slot heads, and optional
// domain->intent and gated intent->slot links.
template <typename Scalar>
class JointModel {
 public:
  explicit JointModel(const ModelConfig& config);
  JointModel(const JointModel&) = delete;
  JointModel& operator=(const JointModel&) = delete;

  const ModelConfig& config() const { return config_; }
  const ParameterStore<Scalar>& parameters() const { return store_; }

  // Xavier weights, zero biases; each parameter seeded by (seed, name).
  void initialize(std::uint64_t seed);

  // Inactive links are skipped entirely, which is forward-identical to zero
  // link weights.
  bool links_active() const { return links_active_; }
  void set_links_active(bool active);

  std::vector<std::string> link_parameter_names() const;
  // Character embeddings, CompCNN, projection and the word highway (or the
  // word table and highway in word mode).
  std::vector<std::string> front_parameter_names() const;

  // [word_dim, U] vectors for the distinct word forms of the batch.
  Tensor<Scalar> word_vectors(Tape<Scalar>& tape, const EncodedBatch& batch) const;
  // [word_dim, words.count()] from the character front end alone.
  Tensor<Scalar> compose_words(Tape<Scalar>& tape, const PackedWords& words) const;

  JointOutput<Scalar> forward(Tape<Scalar>& tape, const EncodedBatch& batch) const;
  LossTerms<Scalar> loss(Tape<Scalar>& tape, const JointOutput<Scalar>& output, const EncodedBatch& batch) const;
  std::vector<Prediction> predict(const EncodedBatch& batch) const;

 private:
  ModelConfig config_;
  ParameterStore<Scalar> store_;
  std::optional<CompCnn<Scalar>> comp_cnn_;
  Tensor<Scalar> word_table_;
  Highway<Scalar> word_highway_;
  StackedCnn<Scalar> context_;
  std::optional<OutputHead<Scalar>> domain_head_, intent_head_, slot_head_;
  std::optional<Link<Scalar>> domain_intent_link_, intent_slot_link_;
  bool links_active_ = false;
};

}  // namespace jointnlu
