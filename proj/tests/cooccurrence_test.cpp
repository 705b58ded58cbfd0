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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "jointnlu/cooccurrence.hpp"

namespace jointnlu {
namespace {

namespace fs = std::filesystem;

const fs::path kDemoSpec = fs::path(JOINTNLU_SOURCE_DIR) / "data" / "demo_spec.json";

CooccurrenceOptions small_options() {
  CooccurrenceOptions o;
  o.utterances = 60000;
  o.dim = 30;
  return o;
}

Index find_word(const EmbeddingTable& t, const std::string& w) {
  const auto it = std::find(t.words.begin(), t.words.end(), w);
  return it == t.words.end() ? -1 : static_cast<Index>(it - t.words.begin());
}

bool held_out_form(const CorpusSpec& spec, const std::string& w) {
  for (const auto& s : spec.held_out_suffixes) {
    if (w.size() > s.size() && w.compare(w.size() - s.size(), s.size(), s) == 0) return true;
  }
  return false;
}

TEST(Cooccurrence, HandCorpusSeparatesDistributionalClasses) {
  // Two word classes that never share a context.
  std::vector<Utterance> corpus;
  Rng rng(5);
  const std::vector<std::string> fruit{"apple", "pear", "plum", "fig"}, tool{"saw", "drill", "file", "vise"};
  const std::vector<std::string> eat{"eat", "peel", "slice"}, use{"use", "grab", "hold"};
  for (int i = 0; i < 4000; ++i) {
    const bool f = rng.bernoulli(0.5);
    Utterance u;
    u.tokens = {rng.pick(f ? eat : use), "the", rng.pick(f ? fruit : tool), rng.pick(f ? eat : use)};
    u.slots.assign(4, "Other");
    u.domain = "d";
    u.intent = "i";
    corpus.push_back(u);
  }
  CooccurrenceOptions o;
  o.dim = 4;
  o.oversample = 4;
  const auto table = ppmi_svd_embeddings(corpus, o);
  ASSERT_EQ(table.size(), 15);
  ASSERT_EQ(table.dim(), 4);
  for (Index i = 0; i < table.size(); ++i) EXPECT_NEAR(table.vectors.col(i).norm(), 1.0, 1e-12);
  const double within = cosine(table, find_word(table, "apple"), find_word(table, "plum"));
  const double across = cosine(table, find_word(table, "apple"), find_word(table, "drill"));
  EXPECT_GT(within, 0.9);
  EXPECT_LT(across, within - 0.5);
}

TEST(Cooccurrence, RecipeIsDeterministicAndIndependentOfSplits) {
  const CorpusGenerator gen(load_corpus_spec(kDemoSpec));
  const auto a = cooccurrence_embeddings(gen, small_options());
  const auto b = cooccurrence_embeddings(gen, small_options());
  EXPECT_EQ(a.words, b.words);
  EXPECT_EQ(a.vectors, b.vectors);
  EXPECT_TRUE(std::is_sorted(a.words.begin(), a.words.end()));
  // Held-out suffixes appear in the co-occurrence corpus.
  EXPECT_TRUE(std::any_of(a.words.begin(), a.words.end(),
                          [&](const std::string& w) { return held_out_form(gen.spec(), w); }));
}

TEST(Cooccurrence, MorphologicalVariantsShareContexts) {
  const CorpusGenerator gen(load_corpus_spec(kDemoSpec));
  const auto table = cooccurrence_embeddings(gen, small_options());
  double variant = 0.0, random = 0.0;
  int n = 0;
  Rng rng(9);
  for (const auto& stem : gen.stems("song")) {
    const Index a = find_word(table, stem), b = find_word(table, stem + "chen");
    if (a < 0 || b < 0) continue;
    variant += cosine(table, a, b);
    random += cosine(table, static_cast<Index>(rng.below(table.words.size())),
                     static_cast<Index>(rng.below(table.words.size())));
    ++n;
  }
  ASSERT_GT(n, 50);
  EXPECT_GT(variant / n, random / n + 0.3);
}

TEST(Cooccurrence, TooSmallVocabularyIsRejected) {
  Utterance u{{"a", "b"}, {"Other", "Other"}, "d", "i"};
  std::vector<Utterance> corpus(10, u);
  EXPECT_THROW(ppmi_svd_embeddings(corpus, CooccurrenceOptions{}), ValidationError);
}

TEST(Cooccurrence, DistilledFrontEndGeneralizesToHeldOutVariants) {
  const CorpusGenerator gen(load_corpus_spec(kDemoSpec));
  const auto splits = gen.generate();
  const auto vocab = build_vocabularies(splits.train);
  const auto full = cooccurrence_embeddings(gen, small_options());

  // Distill on training-suffix forms only.
  EmbeddingTable table;
  std::vector<Index> keep;
  for (Index i = 0; i < full.size(); ++i) {
    if (!held_out_form(gen.spec(), full.words[static_cast<std::size_t>(i)])) keep.push_back(i);
  }
  table.vectors.resize(full.dim(), static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    table.words.push_back(full.words[static_cast<std::size_t>(keep[k])]);
    table.vectors.col(static_cast<Index>(k)) = full.vectors.col(keep[k]);
  }

  ModelConfig cfg;
  cfg.word_dim = full.dim();
  cfg.context_dim = 20;
  cfg.char_filters = {{3, 30}, {4, 30}};
  cfg.links = false;
  cfg.precision = Precision::kFloat;
  cfg.set_vocabulary_sizes(vocab);
  JointModel<float> model(cfg);
  model.initialize(2);
  DistillOptions opts;
  opts.epochs = 8;
  const auto result = distill_embeddings(model, vocab.chars, table, opts);
  EXPECT_LT(result.final_loss, result.initial_loss);

  std::vector<std::string> stems, variants;
  for (const auto& lexicon : {"song", "city", "product"}) {
    for (const auto& s : gen.stems(lexicon)) {
      stems.push_back(s);
      variants.push_back(s + "lein");
    }
  }
  const RowMatrix<double> a = composed_vectors(model, vocab.chars, stems).cast<double>();
  const RowMatrix<double> b = composed_vectors(model, vocab.chars, variants).cast<double>();
  auto cos = [](const auto& x, const auto& y) { return x.dot(y) / (x.norm() * y.norm()); };
  double paired = 0.0, shuffled = 0.0;
  Rng rng(4);
  const auto count = static_cast<Index>(stems.size());
  for (Index i = 0; i < count; ++i) {
    paired += cos(a.col(i), b.col(i));
    shuffled += cos(a.col(static_cast<Index>(rng.below(count))), b.col(static_cast<Index>(rng.below(count))));
  }
  EXPECT_GT(paired / count, shuffled / count);
}

}  // namespace
}  // namespace jointnlu
