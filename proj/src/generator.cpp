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

#include "jointnlu/generator.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "jointnlu/json_util.hpp"

namespace jointnlu {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_spaces(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<std::string> split_bar(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '|') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool is_slot(const std::string& tok) { return tok.size() > 2 && tok.front() == '{' && tok.back() == '}'; }

std::string slot_of(const std::string& tok) { return tok.substr(1, tok.size() - 2); }

}  // namespace

void CorpusSpec::validate() const {
  if (domains.size() < 2) throw ValidationError("corpus spec: at least two domains are required");
  if (train_size < 1 || dev_size < 0 || test_size < 1) throw ValidationError("corpus spec: invalid split sizes");
  if (!(test_oov_rate >= 0.0 && test_oov_rate <= 1.0)) throw ValidationError("corpus spec: test_oov_rate must lie in [0, 1]");
  if (train_suffixes.empty()) throw ValidationError("corpus spec: no training suffixes");
  if (test_oov_rate > 0 && held_out_suffixes.empty()) {
    throw ValidationError("corpus spec: test_oov_rate > 0 needs held-out suffixes");
  }
  std::set<std::string> train_set(train_suffixes.begin(), train_suffixes.end());
  for (const auto& s : held_out_suffixes) {
    if (train_set.count(s)) throw ValidationError("corpus spec: suffix '" + s + "' is both training and held-out");
    if (s.empty()) throw ValidationError("corpus spec: the empty suffix cannot be held out");
  }
  std::set<std::string> lexicon_names;
  for (const auto& l : lexicons) {
    if (!lexicon_names.insert(l.name).second) throw ValidationError("corpus spec: duplicate lexicon '" + l.name + "'");
    if (l.stems.empty() && l.generated < 1) throw ValidationError("corpus spec: lexicon '" + l.name + "' is empty");
    if (l.generated > 0 && (l.min_syllables < 1 || l.max_syllables < l.min_syllables)) {
      throw ValidationError("corpus spec: lexicon '" + l.name + "' has an invalid syllable range");
    }
    if (l.generated > 0 && l.syllables.empty() && syllables.empty()) {
      throw ValidationError("corpus spec: lexicon '" + l.name + "' generates stems but no syllables are given");
    }
  }
  for (const auto& [slot, lex] : slot_lexicon) {
    if (!lexicon_names.count(lex)) {
      throw ValidationError("corpus spec: slot '" + slot + "' uses unknown lexicon '" + lex + "'");
    }
    if (slot == kOtherSlot) throw ValidationError("corpus spec: 'Other' is reserved");
  }
  std::set<std::string> domain_names, intent_names;
  for (const auto& d : domains) {
    if (!domain_names.insert(d.name).second) throw ValidationError("corpus spec: duplicate domain '" + d.name + "'");
    if (d.intents.size() < 2) throw ValidationError("corpus spec: domain '" + d.name + "' needs at least two intents");
    for (const auto& i : d.intents) {
      if (!intent_names.insert(i.name).second) throw ValidationError("corpus spec: duplicate intent '" + i.name + "'");
      if (i.templates.empty()) throw ValidationError("corpus spec: intent '" + i.name + "' has no template");
      if (!(i.weight > 0)) throw ValidationError("corpus spec: intent '" + i.name + "' needs a positive weight");
      bool slotful = false;
      for (const auto& t : i.templates) {
        if (split_spaces(t).empty()) {
          throw ValidationError("corpus spec: intent '" + i.name + "' has an empty template");
        }
        for (std::size_t open = t.find('{'); open != std::string::npos; open = t.find('{', open + 1)) {
          const auto close = t.find('}', open);
          if (close == std::string::npos) throw ValidationError("corpus spec: unclosed slot in '" + t + "'");
          const auto slot = t.substr(open + 1, close - open - 1);
          if (!slot_lexicon.count(slot)) {
            throw ValidationError("corpus spec: template '" + t + "' uses undefined slot '" + slot + "'");
          }
          // A slot inside an optional group does not guarantee a filler.
          const auto before = t.substr(0, open);
          const bool optional = std::count(before.begin(), before.end(), '[') >
                                std::count(before.begin(), before.end(), ']');
          slotful = slotful || !optional;
        }
      }
      if (!slotful) throw ValidationError("corpus spec: intent '" + i.name + "' has no template with a slot");
    }
  }
}

CorpusSpec corpus_spec_from_json(const json& j) {
  StrictObject o(j, "spec");
  CorpusSpec s;
  o.read("name", s.name);
  o.read("seed", s.seed);
  if (const auto* sizes = o.child("sizes")) {
    StrictObject so(*sizes, o.path("sizes"));
    so.read("train", s.train_size);
    so.read("dev", s.dev_size);
    so.read("test", s.test_size);
    so.finish();
  }
  o.read("test_oov_rate", s.test_oov_rate);
  if (const auto* suf = o.child("suffixes")) {
    StrictObject so(*suf, o.path("suffixes"));
    s.train_suffixes = so.require<std::vector<std::string>>("train");
    so.read("held_out", s.held_out_suffixes);
    so.finish();
  }
  o.read("syllables", s.syllables);
  if (const auto* lex = o.child("lexicons")) {
    if (!lex->is_object()) throw ValidationError("spec.lexicons: expected an object");
    for (const auto& [name, body] : lex->items()) {
      StrictObject lo(body, o.path("lexicons." + name));
      Lexicon l;
      l.name = name;
      lo.read("stems", l.stems);
      lo.read("generate", l.generated);
      lo.read("syllables", l.syllables);
      std::array<Index, 2> range{l.min_syllables, l.max_syllables};
      if (lo.read("syllables_per_stem", range)) {
        l.min_syllables = range[0];
        l.max_syllables = range[1];
      }
      lo.finish();
      s.lexicons.push_back(std::move(l));
    }
  }
  o.read("slots", s.slot_lexicon);
  if (const auto* doms = o.child("domains")) {
    if (!doms->is_array()) throw ValidationError("spec.domains: expected an array");
    for (const auto& d : *doms) {
      StrictObject dobj(d, o.path("domains"));
      DomainSpec ds;
      ds.name = dobj.require<std::string>("name");
      const auto* intents = dobj.child("intents");
      if (!intents || !intents->is_array()) throw ValidationError("spec.domains." + ds.name + ": intents missing");
      for (const auto& i : *intents) {
        StrictObject iobj(i, "spec.domains." + ds.name + ".intents");
        IntentSpec is;
        is.name = iobj.require<std::string>("name");
        iobj.read("weight", is.weight);
        iobj.read("templates", is.templates);
        iobj.finish();
        ds.intents.push_back(std::move(is));
      }
      dobj.finish();
      s.domains.push_back(std::move(ds));
    }
  }
  o.finish();
  s.validate();
  return s;
}

ordered_json corpus_spec_to_json(const CorpusSpec& s) {
  ordered_json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["sizes"] = {{"train", s.train_size}, {"dev", s.dev_size}, {"test", s.test_size}};
  j["test_oov_rate"] = s.test_oov_rate;
  j["suffixes"] = {{"train", s.train_suffixes}, {"held_out", s.held_out_suffixes}};
  j["syllables"] = s.syllables;
  ordered_json lex = ordered_json::object();
  for (const auto& l : s.lexicons) {
    ordered_json body;
    if (!l.stems.empty()) body["stems"] = l.stems;
    if (l.generated > 0) {
      body["generate"] = l.generated;
      body["syllables_per_stem"] = {l.min_syllables, l.max_syllables};
    }
    if (!l.syllables.empty()) body["syllables"] = l.syllables;
    lex[l.name] = body;
  }
  j["lexicons"] = lex;
  j["slots"] = s.slot_lexicon;
  auto doms = ordered_json::array();
  for (const auto& d : s.domains) {
    auto intents = ordered_json::array();
    for (const auto& i : d.intents) {
      intents.push_back({{"name", i.name}, {"weight", i.weight}, {"templates", i.templates}});
    }
    doms.push_back({{"name", d.name}, {"intents", intents}});
  }
  j["domains"] = doms;
  return j;
}

CorpusSpec load_corpus_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus spec " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return corpus_spec_from_json(j);
}

// ---------------------------------------------------------------- generator

CorpusGenerator::CorpusGenerator(CorpusSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::vector<std::string> suffixes = spec_.train_suffixes;
  suffixes.insert(suffixes.end(), spec_.held_out_suffixes.begin(), spec_.held_out_suffixes.end());

  // Template words may not collide with any filler form.
  std::set<std::string> taken;
  for (const auto& d : spec_.domains) {
    for (const auto& i : d.intents) {
      for (const auto& t : i.templates) {
        std::function<void(const std::vector<Piece>&)> collect = [&](const std::vector<Piece>& pieces) {
          for (const auto& p : pieces) {
            if (p.kind == Piece::kOptional) collect(p.group);
            if (p.kind == Piece::kWord || p.kind == Piece::kChoice) taken.insert(p.options.begin(), p.options.end());
          }
        };
        collect(parse_template(t));
      }
    }
  }
  auto forms_free = [&](const std::string& stem) {
    for (const auto& s : suffixes) {
      if (taken.count(stem + s)) return false;
    }
    return true;
  };
  auto claim = [&](const std::string& stem) {
    for (const auto& s : suffixes) taken.insert(stem + s);
  };

  Rng rng(derive_seed(spec_.seed, "stems"));
  for (const auto& lex : spec_.lexicons) {
    auto& out = stems_[lex.name];
    for (const auto& s : lex.stems) {
      if (s.empty() || !forms_free(s)) {
        throw ValidationError("corpus spec: stem '" + s + "' of lexicon '" + lex.name + "' collides with another form");
      }
      claim(s);
      out.push_back(s);
    }
    const auto& pool = lex.syllables.empty() ? spec_.syllables : lex.syllables;
    Index attempts = 0;
    for (Index made = 0; made < lex.generated;) {
      if (++attempts > 1000 * (lex.generated + 10)) {
        throw ValidationError("corpus spec: cannot generate " + std::to_string(lex.generated) +
                              " distinct stems for lexicon '" + lex.name + "'");
      }
      const Index n = lex.min_syllables +
                      static_cast<Index>(rng.below(static_cast<std::uint64_t>(lex.max_syllables - lex.min_syllables + 1)));
      std::string stem;
      for (Index k = 0; k < n; ++k) stem += rng.pick(pool);
      if (!forms_free(stem)) continue;
      claim(stem);
      out.push_back(stem);
      ++made;
    }
  }

  for (const auto& d : spec_.domains) {
    for (const auto& i : d.intents) {
      for (const auto& t : i.templates) {
        templates_.push_back({d.name, i.name, parse_template(t)});
        template_weights_.push_back(i.weight / static_cast<double>(i.templates.size()));
      }
    }
  }
}

std::vector<CorpusGenerator::Piece> CorpusGenerator::parse_template(const std::string& text) {
  std::vector<Piece> top;
  std::vector<Piece>* target = &top;
  for (auto tok : split_spaces(text)) {
    bool closes = false;
    if (tok.front() == '[') {
      if (target != &top) throw ValidationError("template '" + text + "': nested optional groups");
      top.push_back({Piece::kOptional, {}, {}});
      target = &top.back().group;
      tok.erase(0, 1);
    }
    if (!tok.empty() && tok.back() == ']') {
      if (target == &top) throw ValidationError("template '" + text + "': unbalanced ']'");
      closes = true;
      tok.pop_back();
    }
    if (tok.empty()) throw ValidationError("template '" + text + "': empty token");
    if (is_slot(tok)) {
      target->push_back({Piece::kSlot, {slot_of(tok)}, {}});
    } else if (tok.front() == '(' && tok.back() == ')' && tok.size() > 2) {
      auto options = split_bar(tok.substr(1, tok.size() - 2));
      for (const auto& o : options) {
        if (o.empty()) throw ValidationError("template '" + text + "': empty alternative");
      }
      target->push_back({Piece::kChoice, std::move(options), {}});
    } else {
      if (tok.find_first_of("[](){}|") != std::string::npos) {
        throw ValidationError("template '" + text + "': malformed token '" + tok + "'");
      }
      target->push_back({Piece::kWord, {tok}, {}});
    }
    if (closes) target = &top;
  }
  if (target != &top) throw ValidationError("template '" + text + "': unclosed '['");
  return top;
}

void CorpusGenerator::emit(const std::vector<Piece>& pieces, Rng& rng, SuffixPool pool, Utterance& u) const {
  for (const auto& piece : pieces) {
    switch (piece.kind) {
      case Piece::kWord:
      case Piece::kChoice:
        u.tokens.push_back(piece.options.size() == 1 ? piece.options[0] : rng.pick(piece.options));
        u.slots.push_back(kOtherSlot);
        break;
      case Piece::kOptional:
        if (rng.bernoulli(0.5)) emit(piece.group, rng, pool, u);
        break;
      case Piece::kSlot: {
        const auto& slot = piece.options[0];
        const auto& stem = rng.pick(stems_.at(spec_.slot_lexicon.at(slot)));
        const std::string* suffix = nullptr;
        if (pool == SuffixPool::kTest && rng.bernoulli(spec_.test_oov_rate)) {
          suffix = &rng.pick(spec_.held_out_suffixes);
        } else if (pool == SuffixPool::kAll) {
          const auto n = spec_.train_suffixes.size() + spec_.held_out_suffixes.size();
          const auto k = static_cast<std::size_t>(rng.below(n));
          suffix = k < spec_.train_suffixes.size() ? &spec_.train_suffixes[k]
                                                   : &spec_.held_out_suffixes[k - spec_.train_suffixes.size()];
        } else {
          suffix = &rng.pick(spec_.train_suffixes);
        }
        u.tokens.push_back(stem + *suffix);
        u.slots.push_back(slot);
        break;
      }
    }
  }
}

Utterance CorpusGenerator::sample(Rng& rng, SuffixPool pool) const {
  double total = 0.0;
  for (double w : template_weights_) total += w;
  double r = rng.uniform() * total;
  std::size_t pick = 0;
  while (pick + 1 < templates_.size() && r >= template_weights_[pick]) r -= template_weights_[pick++];
  const auto& tpl = templates_[pick];

  Utterance u;
  u.domain = tpl.domain;
  u.intent = tpl.intent;
  emit(tpl.pieces, rng, pool, u);
  return u;
}

std::vector<Utterance> CorpusGenerator::sample_many(std::uint64_t seed, std::string_view purpose, Index count,
                                                    SuffixPool pool) const {
  Rng rng(derive_seed(seed, purpose));
  std::vector<Utterance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) out.push_back(sample(rng, pool));
  return out;
}

CorpusGenerator::Splits CorpusGenerator::generate() const {
  Splits s;
  s.train = sample_many(spec_.seed, "train", spec_.train_size, SuffixPool::kTrain);
  s.dev = sample_many(spec_.seed, "dev", spec_.dev_size, SuffixPool::kTrain);
  s.test = sample_many(spec_.seed, "test", spec_.test_size, SuffixPool::kTest);
  return s;
}

OovStats oov_statistics(const std::vector<Utterance>& train, const std::vector<Utterance>& test) {
  std::set<std::string> seen;
  for (const auto& u : train) seen.insert(u.tokens.begin(), u.tokens.end());
  OovStats s;
  for (const auto& u : test) {
    for (std::size_t j = 0; j < u.tokens.size(); ++j) {
      const bool oov = !seen.count(u.tokens[j]);
      ++s.tokens;
      s.token_oov += oov;
      if (u.slots[j] != kOtherSlot) {
        ++s.filler_tokens;
        s.filler_oov += oov;
      }
    }
  }
  return s;
}

ordered_json CorpusGenerator::manifest(const Splits& splits) const {
  ordered_json m;
  m["name"] = spec_.name;
  m["seed"] = spec_.seed;
  m["sizes"] = {{"train", splits.train.size()}, {"dev", splits.dev.size()}, {"test", splits.test.size()}};
  std::vector<std::string> domains, intents, slots{kOtherSlot};
  for (const auto& d : spec_.domains) {
    domains.push_back(d.name);
    for (const auto& i : d.intents) intents.push_back(i.name);
  }
  for (const auto& [slot, lex] : spec_.slot_lexicon) slots.push_back(slot);
  std::sort(domains.begin(), domains.end());
  std::sort(intents.begin(), intents.end());
  std::sort(slots.begin(), slots.end());
  m["inventories"] = {{"domains", domains}, {"intents", intents}, {"slots", slots}};
  m["counts"] = {{"domains", domains.size()}, {"intents", intents.size()}, {"slot_types", slots.size() - 1}};
  auto observed = inventory_of(splits.train);
  m["train_inventories_closed"] = observed.domains == domains && observed.intents == intents;
  const auto oov = oov_statistics(splits.train, splits.test);
  m["test_oov"] = {{"filler_tokens", oov.filler_tokens},
                   {"filler_oov", oov.filler_oov},
                   {"filler_oov_rate", oov.filler_rate()},
                   {"tokens", oov.tokens},
                   {"token_oov", oov.token_oov},
                   {"token_oov_rate", oov.token_rate()}};
  ordered_json lex = ordered_json::object();
  for (const auto& [name, stems] : stems_) lex[name] = stems.size();
  m["lexicon_stems"] = lex;
  return m;
}

void write_generated_corpus(const CorpusGenerator& generator, const fs::path& out_dir) {
  const auto splits = generator.generate();
  const auto manifest = generator.manifest(splits);
  const fs::path parent = out_dir.has_parent_path() ? out_dir.parent_path() : fs::path(".");
  fs::create_directories(parent);
  fs::path staging = out_dir;
  staging += ".partial";
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    write_corpus(staging / "train.jsonl", splits.train);
    write_corpus(staging / "dev.jsonl", splits.dev);
    write_corpus(staging / "test.jsonl", splits.test);
    std::ofstream(staging / "manifest.json") << manifest.dump(2) << "\n";
    std::ofstream(staging / "spec.json") << corpus_spec_to_json(generator.spec()).dump(2) << "\n";
    fs::create_directories(out_dir);
    for (const char* name : {"train.jsonl", "dev.jsonl", "test.jsonl", "manifest.json", "spec.json"}) {
      fs::rename(staging / name, out_dir / name);
    }
    fs::remove_all(staging);
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
}

}  // namespace jointnlu
