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

#include "jointnlu/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace jointnlu {

using nlohmann::json;

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

Vocabulary::Vocabulary(const std::vector<std::string>& symbols) : Vocabulary() {
  for (const auto& s : symbols) add(s);
}

Index Vocabulary::add(const std::string& symbol) {
  if (auto it = index_.find(symbol); it != index_.end()) return it->second;
  const Index idx = size();
  symbols_.push_back(symbol);
  index_.emplace(symbol, idx);
  return idx;
}

std::optional<Index> Vocabulary::find(const std::string& symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end() || it->second < kReserved) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::symbol(Index index) const {
  if (index < 0 || index >= size()) throw ValidationError("vocabulary index " + std::to_string(index) + " out of range");
  return symbols_[static_cast<std::size_t>(index)];
}

std::optional<Index> Vocabulary::class_of(const std::string& label) const {
  auto idx = find(label);
  if (!idx) return std::nullopt;
  return *idx - kReserved;
}

std::vector<std::string> utf8_characters(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if ((lead & 0xE0) == 0xC0) len = 2;
    else if ((lead & 0xF0) == 0xE0) len = 3;
    else if ((lead & 0xF8) == 0xF0) len = 4;
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

void validate_utterance(const Utterance& u) {
  if (u.tokens.empty()) throw ValidationError("utterance has no tokens");
  if (u.tokens.size() != u.slots.size()) {
    throw ValidationError("utterance has " + std::to_string(u.tokens.size()) + " tokens but " +
                          std::to_string(u.slots.size()) + " slot labels");
  }
  for (const auto& t : u.tokens) {
    if (t.empty()) throw ValidationError("utterance contains an empty token");
  }
  if (u.domain.empty() || u.intent.empty()) throw ValidationError("utterance is missing its domain or intent label");
}

Utterance utterance_from_json(const json& record) {
  if (!record.is_object()) throw ValidationError("record is not an object");
  static const std::set<std::string> kKeys = {"tokens", "slots", "domain", "intent"};
  for (const auto& [key, _] : record.items()) {
    if (!kKeys.count(key)) throw ValidationError("unknown key '" + key + "'");
  }
  for (const auto& key : kKeys) {
    if (!record.contains(key)) throw ValidationError("missing key '" + key + "'");
  }
  Utterance u;
  try {
    u.tokens = record.at("tokens").get<std::vector<std::string>>();
    u.slots = record.at("slots").get<std::vector<std::string>>();
    u.domain = record.at("domain").get<std::string>();
    u.intent = record.at("intent").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad field type: ") + e.what());
  }
  validate_utterance(u);
  return u;
}

nlohmann::ordered_json utterance_to_json(const Utterance& u) {
  nlohmann::ordered_json j;
  j["tokens"] = u.tokens;
  j["slots"] = u.slots;
  j["domain"] = u.domain;
  j["intent"] = u.intent;
  return j;
}

LabelInventory inventory_of(const std::vector<Utterance>& utterances) {
  std::set<std::string> domains, intents, slots;
  for (const auto& u : utterances) {
    domains.insert(u.domain);
    intents.insert(u.intent);
    slots.insert(u.slots.begin(), u.slots.end());
  }
  return {{domains.begin(), domains.end()}, {intents.begin(), intents.end()}, {slots.begin(), slots.end()}};
}

Corpus parse_corpus(std::istream& in, const std::string& source_name) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      corpus.utterances.push_back(utterance_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (corpus.utterances.empty()) throw ValidationError(source_name + ": corpus is empty");
  corpus.inventory = inventory_of(corpus.utterances);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file " + path.string());
  return parse_corpus(in, path.string());
}

std::string corpus_to_string(const std::vector<Utterance>& utterances) {
  std::string out;
  for (const auto& u : utterances) {
    validate_utterance(u);
    out += utterance_to_json(u).dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<Utterance>& utterances) {
  const std::string text = corpus_to_string(utterances);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write corpus file " + path.string());
  out << text;
  if (!out) throw RuntimeFailure("failed writing " + path.string());
}

Vocabularies build_vocabularies(const std::vector<Utterance>& train) {
  if (train.empty()) throw ValidationError("cannot build vocabularies from an empty corpus");
  std::set<std::string> chars, words;
  for (const auto& u : train) {
    for (const auto& t : u.tokens) {
      words.insert(t);
      for (auto& c : utf8_characters(t)) chars.insert(std::move(c));
    }
  }
  const LabelInventory inv = inventory_of(train);
  Vocabularies v;
  v.chars = Vocabulary({chars.begin(), chars.end()});
  v.words = Vocabulary({words.begin(), words.end()});
  v.domains = Vocabulary(inv.domains);
  v.intents = Vocabulary(inv.intents);
  v.slots = Vocabulary(inv.slots);
  return v;
}

namespace {

Vocabulary vocabulary_from_json(const json& j, const char* name) {
  if (!j.contains(name)) throw ValidationError(std::string("vocabulary '") + name + "' missing");
  const auto symbols = j.at(name).get<std::vector<std::string>>();
  if (symbols.size() < 2 || symbols[0] != "<pad>" || symbols[1] != "<unk>") {
    throw ValidationError(std::string("vocabulary '") + name + "' lacks reserved entries");
  }
  return Vocabulary({symbols.begin() + 2, symbols.end()});
}

}  // namespace

json vocabularies_to_json(const Vocabularies& v) {
  return json{{"chars", v.chars.symbols()},
              {"words", v.words.symbols()},
              {"domains", v.domains.symbols()},
              {"intents", v.intents.symbols()},
              {"slots", v.slots.symbols()}};
}

Vocabularies vocabularies_from_json(const json& j) {
  Vocabularies v;
  v.chars = vocabulary_from_json(j, "chars");
  v.words = vocabulary_from_json(j, "words");
  v.domains = vocabulary_from_json(j, "domains");
  v.intents = vocabulary_from_json(j, "intents");
  v.slots = vocabulary_from_json(j, "slots");
  return v;
}

std::vector<std::string> unknown_labels(const Vocabularies& vocab, const LabelInventory& inventory) {
  std::vector<std::string> unknown;
  for (const auto& d : inventory.domains)
    if (!vocab.domains.find(d)) unknown.push_back("domain:" + d);
  for (const auto& i : inventory.intents)
    if (!vocab.intents.find(i)) unknown.push_back("intent:" + i);
  for (const auto& s : inventory.slots)
    if (!vocab.slots.find(s)) unknown.push_back("slot:" + s);
  return unknown;
}

Index EncodedBatch::token_count() const {
  Index n = 0;
  for (Index len : lengths) n += len;
  return n;
}

EncodedBatch encode_batch(const std::vector<const Utterance*>& utterances, const Vocabularies& vocab, Index max_len,
                          Index min_char_width) {
  if (utterances.empty()) throw ValidationError("encode_batch: empty batch");
  if (max_len < 1) throw ValidationError("encode_batch: max_len must be positive");
  EncodedBatch batch;
  batch.batch_size = static_cast<Index>(utterances.size());
  for (const Utterance* u : utterances) {
    if (u->tokens.empty()) throw ValidationError("encode_batch: utterance without tokens");
    const Index len = std::min<Index>(static_cast<Index>(u->tokens.size()), max_len);
    if (static_cast<Index>(u->tokens.size()) > max_len) ++batch.truncated;
    batch.lengths.push_back(len);
    batch.seq_len = std::max(batch.seq_len, len);
  }
  const auto total = static_cast<std::size_t>(batch.batch_size * batch.seq_len);
  batch.mask.assign(total, 0);
  batch.word_ids.assign(total, Vocabulary::kPad);
  batch.token_unique.assign(total, -1);
  batch.slots.assign(total, -1);

  std::unordered_map<std::string, Index> unique;
  std::vector<std::vector<Index>> forms;
  for (Index b = 0; b < batch.batch_size; ++b) {
    const Utterance& u = *utterances[static_cast<std::size_t>(b)];
    batch.domain.push_back(vocab.domains.class_of(u.domain).value_or(-1));
    batch.intent.push_back(vocab.intents.class_of(u.intent).value_or(-1));
    for (Index j = 0; j < batch.lengths[static_cast<std::size_t>(b)]; ++j) {
      const auto pos = static_cast<std::size_t>(batch.position(b, j));
      const std::string& token = u.tokens[static_cast<std::size_t>(j)];
      batch.mask[pos] = 1;
      batch.word_ids[pos] = vocab.words.index_of(token);
      if (j < static_cast<Index>(u.slots.size())) batch.slots[pos] = vocab.slots.class_of(u.slots[static_cast<std::size_t>(j)]).value_or(-1);
      auto [it, inserted] = unique.emplace(token, static_cast<Index>(forms.size()));
      if (inserted) {
        std::vector<Index> chars;
        for (const auto& c : utf8_characters(token)) chars.push_back(vocab.chars.index_of(c));
        forms.push_back(std::move(chars));
        batch.unique_word_ids.push_back(batch.word_ids[pos]);
      }
      batch.token_unique[pos] = it->second;
    }
  }
  batch.chars = PackedWords::pack(forms, min_char_width);
  return batch;
}

EncodedBatch encode_batch(const std::vector<Utterance>& utterances, const Vocabularies& vocab, Index max_len,
                          Index min_char_width) {
  std::vector<const Utterance*> ptrs;
  ptrs.reserve(utterances.size());
  for (const auto& u : utterances) ptrs.push_back(&u);
  return encode_batch(ptrs, vocab, max_len, min_char_width);
}

std::vector<std::vector<std::string>> decode_tokens(const EncodedBatch& batch, const Vocabulary& words) {
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(batch.batch_size));
  for (Index b = 0; b < batch.batch_size; ++b) {
    for (Index j = 0; j < batch.seq_len; ++j) {
      const auto pos = static_cast<std::size_t>(batch.position(b, j));
      if (batch.mask[pos]) out[static_cast<std::size_t>(b)].push_back(words.symbol(batch.word_ids[pos]));
    }
  }
  return out;
}

}  // namespace jointnlu
