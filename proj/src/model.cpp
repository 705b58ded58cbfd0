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

#include "jointnlu/model.hpp"

#include <algorithm>

#include "jointnlu/init.hpp"

namespace jointnlu {

const char* task_name(Task t) {
  switch (t) {
    case Task::kDomain: return "domain";
    case Task::kIntent: return "intent";
    case Task::kSlot: return "slot";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (!tasks.any()) throw ValidationError("model: at least one task is required");
  if (links && !tasks.all()) throw ValidationError("model: links require the domain, intent and slot tasks");
  if (char_dim < 1 || word_dim < 1 || context_dim < 1) throw ValidationError("model: dimensions must be positive");
  if (representation == Representation::kCharacters && char_filters.empty()) {
    throw ValidationError("model: character mode needs at least one filter bank");
  }
  for (const auto& f : char_filters) {
    if (f.width < 1 || f.channels < 1) throw ValidationError("model: invalid character filter bank");
  }
  if (context_layers < 1) throw ValidationError("model: at least one context layer is required");
  if (context_width < 1 || context_width % 2 == 0) throw ValidationError("model: context width must be odd");
  if (max_length < 1) throw ValidationError("model: max_length must be positive");
  if (domain_weight < 0 || intent_weight < 0 || slot_weight < 0) throw ValidationError("model: negative task weight");
  if (unk_word_rate < 0 || unk_word_rate >= 1) throw ValidationError("model: unk_word_rate must lie in [0, 1)");
  if (representation == Representation::kWords && word_vocab < Vocabulary::kReserved) {
    throw ValidationError("model: word representation requires a word vocabulary");
  }
  if (representation == Representation::kCharacters && char_vocab < Vocabulary::kReserved) {
    throw ValidationError("model: character representation requires a character vocabulary");
  }
  if (tasks.domain && domain_classes < 1) throw ValidationError("model: no domain classes");
  if (tasks.intent && intent_classes < 1) throw ValidationError("model: no intent classes");
  if (tasks.slot && slot_classes < 1) throw ValidationError("model: no slot classes");
}

void ModelConfig::set_vocabulary_sizes(const Vocabularies& vocab) {
  char_vocab = vocab.chars.size();
  word_vocab = vocab.words.size();
  domain_classes = vocab.domains.class_count();
  intent_classes = vocab.intents.class_count();
  slot_classes = vocab.slots.class_count();
}

Index ModelConfig::min_char_width() const {
  Index w = 1;
  for (const auto& f : char_filters) w = std::max(w, f.width);
  return w;
}

template <typename Scalar>
JointModel<Scalar>::JointModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  if (config_.representation == Representation::kCharacters) {
    comp_cnn_.emplace(store_, "char", config_.char_vocab, config_.char_dim, config_.char_filters, config_.word_dim);
  } else {
    word_table_ = store_.add("word.embedding", {config_.word_dim, config_.word_vocab}, ParamKind::kEmbedding);
  }
  word_highway_ = Highway<Scalar>(store_, "word.highway", config_.word_dim);
  context_ = StackedCnn<Scalar>(store_, "context", config_.word_dim, config_.context_dim, config_.context_width,
                                config_.context_layers);
  if (config_.tasks.domain) domain_head_.emplace(store_, "domain", config_.context_dim, config_.domain_classes);
  if (config_.tasks.intent) intent_head_.emplace(store_, "intent", config_.context_dim, config_.intent_classes);
  if (config_.tasks.slot) slot_head_.emplace(store_, "slot", config_.context_dim, config_.slot_classes);
  if (config_.links) {
    domain_intent_link_.emplace(store_, "link.domain_intent", config_.context_dim, config_.context_dim, false);
    intent_slot_link_.emplace(store_, "link.intent_slot", config_.context_dim, config_.context_dim, true);
    links_active_ = true;
  }
}

template <typename Scalar>
void JointModel<Scalar>::initialize(std::uint64_t seed) {
  initialize_parameters(store_, seed);
}

template <typename Scalar>
void JointModel<Scalar>::set_links_active(bool active) {
  if (active && !config_.links) throw ValidationError("model was built without links");
  links_active_ = active;
}

template <typename Scalar>
std::vector<std::string> JointModel<Scalar>::link_parameter_names() const {
  std::vector<std::string> names;
  for (const auto& p : store_.all()) {
    if (p.name.rfind("link.", 0) == 0) names.push_back(p.name);
  }
  return names;
}

template <typename Scalar>
std::vector<std::string> JointModel<Scalar>::front_parameter_names() const {
  std::vector<std::string> names;
  for (const auto& p : store_.all()) {
    if (p.name.rfind("char.", 0) == 0 || p.name.rfind("word.", 0) == 0) names.push_back(p.name);
  }
  return names;
}

template <typename Scalar>
Tensor<Scalar> JointModel<Scalar>::compose_words(Tape<Scalar>& tape, const PackedWords& words) const {
  if (!comp_cnn_) throw ValidationError("compose_words: model uses word embeddings");
  return word_highway_.forward(tape, comp_cnn_->forward(tape, words));
}

template <typename Scalar>
Tensor<Scalar> JointModel<Scalar>::word_vectors(Tape<Scalar>& tape, const EncodedBatch& batch) const {
  if (comp_cnn_) {
    for (Index c : batch.chars.chars) {
      if (c < 0 || c >= config_.char_vocab) throw ValidationError("character index outside the vocabulary");
    }
    return compose_words(tape, batch.chars);
  }
  return word_highway_.forward(tape, embedding_lookup(tape, word_table_, batch.unique_word_ids));
}

template <typename Scalar>
JointOutput<Scalar> JointModel<Scalar>::forward(Tape<Scalar>& tape, const EncodedBatch& batch) const {
  if (batch.batch_size < 1) throw ValidationError("forward: empty batch");
  const Index B = batch.batch_size;
  const Index n = batch.seq_len;
  // Utterances sit side by side with one always-empty slot after each, so the
  // same-padded convolutions never mix neighbouring utterances.
  const Index stride = n + 1;

  // Word mode gathers from the table by word id; repeated ids share a column.
  std::vector<Index> unique_of_position = batch.token_unique;
  EncodedBatch word_mode_batch;
  const EncodedBatch* source = &batch;
  if (!comp_cnn_) {
    std::vector<Index> ids;
    std::vector<Index> column_of_id(static_cast<std::size_t>(config_.word_vocab), -1);
    for (std::size_t pos = 0; pos < batch.word_ids.size(); ++pos) {
      if (!batch.mask[pos]) continue;
      const Index id = batch.word_ids[pos];
      if (id < 0 || id >= config_.word_vocab) throw ValidationError("word index outside the vocabulary");
      Index& col = column_of_id[static_cast<std::size_t>(id)];
      if (col < 0) {
        col = static_cast<Index>(ids.size());
        ids.push_back(id);
      }
      unique_of_position[pos] = col;
    }
    word_mode_batch.unique_word_ids = std::move(ids);
    source = &word_mode_batch;
  }
  auto vectors = word_vectors(tape, *source);

  std::vector<Index> layout(static_cast<std::size_t>(B * stride), -1);
  std::vector<std::uint8_t> layout_mask(layout.size(), 0);
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(B));
  JointOutput<Scalar> out;
  for (Index b = 0; b < B; ++b) {
    for (Index j = 0; j < batch.lengths[static_cast<std::size_t>(b)]; ++j) {
      const Index pos = batch.position(b, j);
      const Index col = b * stride + j;
      layout[static_cast<std::size_t>(col)] = unique_of_position[static_cast<std::size_t>(pos)];
      layout_mask[static_cast<std::size_t>(col)] = 1;
      groups[static_cast<std::size_t>(b)].push_back(col);
      out.token_positions.push_back(pos);
      out.token_utterance.push_back(b);
    }
  }
  auto sequence = gather_columns(tape, vectors, layout);
  auto contexts = context_.forward(tape, sequence, layout_mask);

  std::optional<Tensor<Scalar>> domain_hidden, intent_hidden;
  if (domain_head_ || intent_head_) {
    auto pooled = max_over_groups(tape, contexts, groups);
    if (domain_head_) {
      domain_hidden = domain_head_->hidden(tape, pooled);
      out.domain_logits = domain_head_->logits(tape, *domain_hidden);
    }
    if (intent_head_) {
      intent_hidden = intent_head_->hidden(tape, pooled);
      if (links_active_) intent_hidden = domain_intent_link_->forward(tape, *domain_hidden, *intent_hidden);
      out.intent_logits = intent_head_->logits(tape, *intent_hidden);
    }
  }
  if (slot_head_) {
    std::vector<Index> token_cols;
    token_cols.reserve(out.token_utterance.size());
    for (Index b = 0; b < B; ++b) {
      for (Index j = 0; j < batch.lengths[static_cast<std::size_t>(b)]; ++j) token_cols.push_back(b * stride + j);
    }
    auto slot_hidden = slot_head_->hidden(tape, gather_columns(tape, contexts, token_cols));
    if (links_active_) {
      slot_hidden = intent_slot_link_->forward(tape, *intent_hidden, slot_hidden, out.token_utterance);
    }
    out.slot_logits = slot_head_->logits(tape, slot_hidden);
  }
  return out;
}

template <typename Scalar>
LossTerms<Scalar> JointModel<Scalar>::loss(Tape<Scalar>& tape, const JointOutput<Scalar>& output,
                                           const EncodedBatch& batch) const {
  const Index B = batch.batch_size;
  LossTerms<Scalar> terms;
  std::vector<Tensor<Scalar>> parts;

  auto check = [](Index label, Index classes, const char* task) {
    if (label < 0 || label >= classes) {
      throw ValidationError(std::string("loss: ") + task + " label index " + std::to_string(label) +
                            " outside [0, " + std::to_string(classes) + ")");
    }
  };
  auto utterance_loss = [&](const Tensor<Scalar>& logits, const std::vector<Index>& labels, double weight,
                            const char* task, double& component) {
    std::vector<Scalar> w(static_cast<std::size_t>(B), static_cast<Scalar>(weight / static_cast<double>(B)));
    for (Index label : labels) check(label, logits.rows(), task);
    auto ce = softmax_cross_entropy(tape, logits, std::span<const Index>(labels), std::span<const Scalar>(w));
    component = weight > 0 ? static_cast<double>(ce.loss.item()) / weight : 0.0;
    parts.push_back(ce.loss);
  };

  if (output.domain_logits) utterance_loss(*output.domain_logits, batch.domain, config_.domain_weight, "domain", terms.domain);
  if (output.intent_logits) utterance_loss(*output.intent_logits, batch.intent, config_.intent_weight, "intent", terms.intent);
  if (output.slot_logits) {
    const auto& logits = *output.slot_logits;
    std::vector<Index> labels;
    std::vector<Scalar> w;
    labels.reserve(output.token_positions.size());
    for (std::size_t k = 0; k < output.token_positions.size(); ++k) {
      const Index label = batch.slots[static_cast<std::size_t>(output.token_positions[k])];
      check(label, logits.rows(), "slot");
      labels.push_back(label);
      const Index len = batch.lengths[static_cast<std::size_t>(output.token_utterance[k])];
      w.push_back(static_cast<Scalar>(config_.slot_weight / static_cast<double>(B * len)));
    }
    auto ce = softmax_cross_entropy(tape, logits, std::span<const Index>(labels), std::span<const Scalar>(w));
    terms.slot = config_.slot_weight > 0 ? static_cast<double>(ce.loss.item()) / config_.slot_weight : 0.0;
    parts.push_back(ce.loss);
  }
  terms.total = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) terms.total = add(tape, terms.total, parts[i]);
  return terms;
}

template <typename Scalar>
std::vector<Prediction> JointModel<Scalar>::predict(const EncodedBatch& batch) const {
  Tape<Scalar> tape;
  tape.set_recording(false);
  const auto out = forward(tape, batch);
  std::vector<Prediction> preds(static_cast<std::size_t>(batch.batch_size));
  auto argmax_columns = [](const Tensor<Scalar>& logits, auto&& sink) {
    const RowMatrix<Scalar> p = softmax_columns<Scalar>(logits.matrix());
    for (Index j = 0; j < p.cols(); ++j) {
      Index best = 0;
      p.col(j).maxCoeff(&best);
      sink(j, best, static_cast<double>(p(best, j)));
    }
  };
  if (out.domain_logits) {
    argmax_columns(*out.domain_logits, [&](Index b, Index cls, double prob) {
      preds[static_cast<std::size_t>(b)].domain = cls;
      preds[static_cast<std::size_t>(b)].domain_probability = prob;
    });
  }
  if (out.intent_logits) {
    argmax_columns(*out.intent_logits, [&](Index b, Index cls, double prob) {
      preds[static_cast<std::size_t>(b)].intent = cls;
      preds[static_cast<std::size_t>(b)].intent_probability = prob;
    });
  }
  if (out.slot_logits) {
    argmax_columns(*out.slot_logits, [&](Index k, Index cls, double prob) {
      auto& p = preds[static_cast<std::size_t>(out.token_utterance[static_cast<std::size_t>(k)])];
      p.slots.push_back(cls);
      p.slot_probabilities.push_back(prob);
    });
  }
  return preds;
}

template class JointModel<float>;
template class JointModel<double>;

}  // namespace jointnlu
