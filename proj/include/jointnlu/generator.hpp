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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jointnlu/data.hpp"
#include "jointnlu/rng.hpp"

namespace jointnlu {

// A pool of filler stems. Stems are listed explicitly or built from
// syllables; every filler token is a stem plus one suffix.
struct Lexicon {
  std::string name;
  std::vector<std::string> stems;
  Index generated = 0;
  Index min_syllables = 2;
  Index max_syllables = 3;
  std::vector<std::string> syllables;  // falls back to the spec's pool
};

struct IntentSpec {
  std::string name;
  double weight = 1.0;
  // Space-separated tokens. {Slot} is a filler, (a|b) picks one
  // alternative and [ ... ] marks a group kept with probability one half.
  std::vector<std::string> templates;
};

struct DomainSpec {
  std::string name;
  std::vector<IntentSpec> intents;
};

struct CorpusSpec {
  std::string name = "corpus";
  std::uint64_t seed = 7;
  Index train_size = 10000;
  Index dev_size = 1000;
  Index test_size = 5000;
  // Probability that a test filler takes a held-out suffix.
  double test_oov_rate = 0.5;
  std::vector<std::string> train_suffixes;
  std::vector<std::string> held_out_suffixes;
  std::vector<std::string> syllables;
  std::vector<Lexicon> lexicons;
  std::map<std::string, std::string> slot_lexicon;  // slot type -> lexicon
  std::vector<DomainSpec> domains;

  void validate() const;
};

CorpusSpec corpus_spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json corpus_spec_to_json(const CorpusSpec& spec);
CorpusSpec load_corpus_spec(const std::filesystem::path& path);

enum class SuffixPool {
  kTrain,     // training suffixes only
  kTest,      // held-out suffixes with probability test_oov_rate
  kAll,       // any suffix, uniformly
};

// Template sampler with resolved stems. Construction is deterministic in the
// spec and its seed.
class CorpusGenerator {
 public:
  explicit CorpusGenerator(CorpusSpec spec);

  const CorpusSpec& spec() const { return spec_; }
  const std::vector<std::string>& stems(const std::string& lexicon) const { return stems_.at(lexicon); }

  Utterance sample(Rng& rng, SuffixPool pool) const;
  std::vector<Utterance> sample_many(std::uint64_t seed, std::string_view purpose, Index count,
                                     SuffixPool pool) const;

  struct Splits {
    std::vector<Utterance> train, dev, test;
  };
  Splits generate() const;

  // Label inventories, split sizes and the OOV statistics of the test split.
  nlohmann::ordered_json manifest(const Splits& splits) const;

 private:
  struct Piece {
    enum Kind { kWord, kOptional, kChoice, kSlot } kind;
    std::vector<std::string> options;  // words of a choice, or the slot name
    std::vector<Piece> group;          // contents of an optional group
  };
  static std::vector<Piece> parse_template(const std::string& text);
  void emit(const std::vector<Piece>& pieces, Rng& rng, SuffixPool pool, Utterance& out) const;
  struct Template {
    std::string domain, intent;
    std::vector<Piece> pieces;
  };

  CorpusSpec spec_;
  std::map<std::string, std::vector<std::string>> stems_;
  std::vector<Template> templates_;
  std::vector<double> template_weights_;
};

struct OovStats {
  Index filler_tokens = 0;
  Index filler_oov = 0;
  Index tokens = 0;
  Index token_oov = 0;

  double filler_rate() const { return filler_tokens ? static_cast<double>(filler_oov) / static_cast<double>(filler_tokens) : 0.0; }
  double token_rate() const { return tokens ? static_cast<double>(token_oov) / static_cast<double>(tokens) : 0.0; }
};

// Tokens of `test` whose form never occurs in `train`; slot fillers are the
// tokens not labelled Other.
OovStats oov_statistics(const std::vector<Utterance>& train, const std::vector<Utterance>& test);

// Writes train.jsonl, dev.jsonl, test.jsonl and manifest.json into out_dir.
// Files are staged in a temporary directory and moved in only when all of
// them are complete.
void write_generated_corpus(const CorpusGenerator& generator, const std::filesystem::path& out_dir);

}  // namespace jointnlu
