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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jointnlu/layers.hpp"

namespace jointnlu {

// One annotated request. slots[i] labels tokens[i]; "Other" marks tokens that
// carry no slot.
struct Utterance {
  std::vector<std::string> tokens;
  std::vector<std::string> slots;
  std::string domain;
  std::string intent;

  bool operator==(const Utterance&) const = default;
};

inline constexpr const char* kOtherSlot = "Other";

// Dense symbol table with PAD at 0 and UNK at 1.
class Vocabulary {
 public:
  static constexpr Index kPad = 0;
  static constexpr Index kUnk = 1;
  static constexpr Index kReserved = 2;

  Vocabulary();
  // Reserved entries followed by the given symbols in order (duplicates dropped).
  explicit Vocabulary(const std::vector<std::string>& symbols);

  Index add(const std::string& symbol);
  std::optional<Index> find(const std::string& symbol) const;
  Index index_of(const std::string& symbol) const { return find(symbol).value_or(kUnk); }
  const std::string& symbol(Index index) const;
  Index size() const { return static_cast<Index>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  // Symbols without the reserved entries.
  std::vector<std::string> entries() const { return {symbols_.begin() + kReserved, symbols_.end()}; }

  // Label view: class c corresponds to vocabulary index c + kReserved, so
  // classifiers never score PAD or UNK.
  Index class_count() const { return size() - kReserved; }
  std::optional<Index> class_of(const std::string& label) const;
  const std::string& label_of(Index cls) const { return symbol(cls + kReserved); }

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, Index, std::less<>> index_;
};

// Splits UTF-8 text into code points, one string each. Invalid bytes become
// single-byte entries.
std::vector<std::string> utf8_characters(const std::string& text);

struct Vocabularies {
  Vocabulary chars;
  Vocabulary words;
  Vocabulary domains;
  Vocabulary intents;
  Vocabulary slots;

  bool operator==(const Vocabularies&) const = default;
};

struct LabelInventory {
  std::vector<std::string> domains;
  std::vector<std::string> intents;
  std::vector<std::string> slots;
};

struct Corpus {
  std::vector<Utterance> utterances;
  LabelInventory inventory;  // sorted observed labels
};

Utterance utterance_from_json(const nlohmann::json& record);
nlohmann::ordered_json utterance_to_json(const Utterance& u);
void validate_utterance(const Utterance& u);

LabelInventory inventory_of(const std::vector<Utterance>& utterances);

// One JSON object per line: {"tokens": [...], "slots": [...], "domain": ..., "intent": ...}.
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::istream& in, const std::string& source_name);
void write_corpus(const std::filesystem::path& path, const std::vector<Utterance>& utterances);
std::string corpus_to_string(const std::vector<Utterance>& utterances);

// Character and word vocabularies come from the training utterances only;
// label vocabularies hold the sorted label inventory.
Vocabularies build_vocabularies(const std::vector<Utterance>& train);

nlohmann::json vocabularies_to_json(const Vocabularies& v);
Vocabularies vocabularies_from_json(const nlohmann::json& j);

// Labels in `inventory` that the vocabularies do not know, as "task:label".
std::vector<std::string> unknown_labels(const Vocabularies& vocab, const LabelInventory& inventory);

// Padded index tensors for one batch. Real tokens of utterance b occupy
// positions b * seq_len + [0, lengths[b]).
struct EncodedBatch {
  Index batch_size = 0;
  Index seq_len = 0;
  std::vector<std::uint8_t> mask;
  std::vector<Index> word_ids;       // PAD at padding
  std::vector<Index> token_unique;   // column in `chars` / unique_word_ids, -1 at padding
  PackedWords chars;                 // distinct word forms, each padded to max(len, min_char_width)
  std::vector<Index> unique_word_ids;
  std::vector<Index> lengths;
  std::vector<Index> domain;         // class index, -1 when unknown
  std::vector<Index> intent;
  std::vector<Index> slots;          // per position, -1 at padding or unknown
  std::size_t truncated = 0;         // utterances cut to max_len

  Index position(Index b, Index j) const { return b * seq_len + j; }
  Index token_count() const;
};

// Unknown characters and words map to UNK; utterances longer than max_len
// are truncated and counted.
EncodedBatch encode_batch(const std::vector<const Utterance*>& utterances, const Vocabularies& vocab, Index max_len,
                          Index min_char_width);
EncodedBatch encode_batch(const std::vector<Utterance>& utterances, const Vocabularies& vocab, Index max_len,
                          Index min_char_width);

// Token strings recovered through the word vocabulary (UNK for OOV tokens).
std::vector<std::vector<std::string>> decode_tokens(const EncodedBatch& batch, const Vocabulary& words);

}  // namespace jointnlu
