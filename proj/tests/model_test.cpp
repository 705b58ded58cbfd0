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

#include <cmath>
#include <map>
#include <sstream>

#include "jointnlu/model.hpp"
#include "test_util.hpp"

namespace jointnlu {
namespace {

using testing::fill;
using testing::named;
using testing::randomize;

Utterance make(std::string text, std::string slots, std::string domain, std::string intent) {
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string w; in >> w;) out.push_back(w);
    return out;
  };
  return {split(text), split(slots), std::move(domain), std::move(intent)};
}

std::vector<Utterance> toy_corpus() {
  return {
      make("play frozen from madonna", "Other Songname Other ArtistName", "Music", "PlayMusic"),
      make("play thriller", "Other Songname", "Music", "PlayMusic"),
      make("read dune to me", "Other BookName Other Other", "Books", "ReadBook"),
      make("buy the book dune", "Other Other Other BookName", "Books", "BuyBook"),
      make("turn up the volume", "Other Other Other Other", "Music", "Volume"),
  };
}

ModelConfig small_config(const Vocabularies& vocab, Representation rep, bool links, TaskSet tasks = {}) {
  ModelConfig c;
  c.representation = rep;
  c.links = links;
  c.tasks = tasks;
  c.char_dim = 3;
  c.word_dim = 5;
  c.context_dim = 4;
  c.char_filters = {{2, 2}, {3, 3}};
  c.set_vocabulary_sizes(vocab);
  return c;
}

struct Toy {
  std::vector<Utterance> corpus = toy_corpus();
  Vocabularies vocab = build_vocabularies(corpus);

  EncodedBatch batch(std::vector<Utterance> utts, const ModelConfig& c) const {
    return encode_batch(utts, vocab, c.max_length, c.min_char_width());
  }
};

bool identical(const Tensor<double>& a, const Tensor<double>& b) {
  if (a.shape() != b.shape()) return false;
  return std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

TEST(ModelConfig, RejectsInconsistentSettings) {
  Toy toy;
  auto c = small_config(toy.vocab, Representation::kCharacters, true, {.domain = true, .intent = false, .slot = true});
  EXPECT_THROW(c.validate(), ValidationError);
  c.links = false;
  EXPECT_NO_THROW(c.validate());
  c.tasks = {false, false, false};
  EXPECT_THROW(c.validate(), ValidationError);

  auto w = small_config(toy.vocab, Representation::kWords, false);
  w.word_vocab = 0;
  EXPECT_THROW(w.validate(), ValidationError);
  w.word_vocab = toy.vocab.words.size();
  w.context_width = 4;
  EXPECT_THROW(w.validate(), ValidationError);
}

TEST(JointModel, ZeroLinksForwardEqualsNoLinksForwardExactly) {
  Toy toy;
  for (auto rep : {Representation::kCharacters, Representation::kWords}) {
    auto with_cfg = small_config(toy.vocab, rep, true);
    auto without_cfg = small_config(toy.vocab, rep, false);
    JointModel<double> with(with_cfg), without(without_cfg);
    with.initialize(11);
    without.initialize(11);
    for (const auto& name : with.link_parameter_names()) fill(with.parameters().at(name).tensor, 0.0);
    ASSERT_TRUE(with.links_active());

    auto batch = toy.batch(toy.corpus, with_cfg);
    Tape<double> t1, t2;
    auto a = with.forward(t1, batch);
    auto b = without.forward(t2, batch);
    EXPECT_TRUE(identical(*a.domain_logits, *b.domain_logits));
    EXPECT_TRUE(identical(*a.intent_logits, *b.intent_logits));
    EXPECT_TRUE(identical(*a.slot_logits, *b.slot_logits));
  }
}

TEST(JointModel, InactiveLinksMatchNoLinksModel) {
  Toy toy;
  auto cfg = small_config(toy.vocab, Representation::kCharacters, true);
  JointModel<double> with(cfg);
  JointModel<double> without(small_config(toy.vocab, Representation::kCharacters, false));
  with.initialize(12);
  without.initialize(12);
  with.set_links_active(false);
  auto batch = toy.batch(toy.corpus, cfg);
  Tape<double> t1, t2;
  EXPECT_TRUE(identical(*with.forward(t1, batch).slot_logits, *without.forward(t2, batch).slot_logits));
  EXPECT_THROW(without.set_links_active(true), ValidationError);
}

TEST(JointModel, BatchOfTwoMatchesSingleForwards) {
  Toy toy;
  for (auto rep : {Representation::kCharacters, Representation::kWords}) {
    auto cfg = small_config(toy.vocab, rep, true);
    JointModel<double> model(cfg);
    model.initialize(13);
    randomize(model.parameters(), 13);
    const auto& u0 = toy.corpus[0];
    const auto& u1 = toy.corpus[3];
    Tape<double> tape;
    auto pair = model.forward(tape, toy.batch({u0, u1}, cfg));
    auto one = model.forward(tape, toy.batch({u0}, cfg));
    auto two = model.forward(tape, toy.batch({u1}, cfg));
    for (Index r = 0; r < cfg.domain_classes; ++r) {
      EXPECT_NEAR(pair.domain_logits->matrix()(r, 0), one.domain_logits->matrix()(r, 0), 1e-12);
      EXPECT_NEAR(pair.domain_logits->matrix()(r, 1), two.domain_logits->matrix()(r, 0), 1e-12);
    }
    for (Index r = 0; r < cfg.intent_classes; ++r) {
      EXPECT_NEAR(pair.intent_logits->matrix()(r, 0), one.intent_logits->matrix()(r, 0), 1e-12);
      EXPECT_NEAR(pair.intent_logits->matrix()(r, 1), two.intent_logits->matrix()(r, 0), 1e-12);
    }
    const Index n0 = static_cast<Index>(u0.tokens.size());
    const Index n1 = static_cast<Index>(u1.tokens.size());
    ASSERT_EQ(pair.slot_logits->cols(), n0 + n1);
    for (Index r = 0; r < cfg.slot_classes; ++r) {
      for (Index j = 0; j < n0; ++j) {
        EXPECT_NEAR(pair.slot_logits->matrix()(r, j), one.slot_logits->matrix()(r, j), 1e-12);
      }
      for (Index j = 0; j < n1; ++j) {
        EXPECT_NEAR(pair.slot_logits->matrix()(r, n0 + j), two.slot_logits->matrix()(r, j), 1e-12);
      }
    }
  }
}

TEST(JointModel, AbsentTasksProduceNoLogits) {
  Toy toy;
  auto cfg = small_config(toy.vocab, Representation::kWords, false, {.domain = false, .intent = true, .slot = false});
  JointModel<double> model(cfg);
  model.initialize(14);
  Tape<double> tape;
  auto out = model.forward(tape, toy.batch(toy.corpus, cfg));
  EXPECT_FALSE(out.domain_logits);
  EXPECT_FALSE(out.slot_logits);
  ASSERT_TRUE(out.intent_logits);
  EXPECT_EQ(out.intent_logits->shape(), (Shape{cfg.intent_classes, 5}));
}

TEST(JointModel, WordAndCharacterModesShareDownstreamShapes) {
  Toy toy;
  JointModel<double> chars(small_config(toy.vocab, Representation::kCharacters, true));
  JointModel<double> words(small_config(toy.vocab, Representation::kWords, true));
  auto shapes = [](const JointModel<double>& m) {
    std::map<std::string, Shape> out;
    for (const auto& p : m.parameters().all()) {
      if (p.name.rfind("char.", 0) != 0 && p.name.rfind("word.embedding", 0) != 0) out[p.name] = p.tensor.shape();
    }
    return out;
  };
  EXPECT_EQ(shapes(chars), shapes(words));
  EXPECT_EQ(words.parameters().at("word.embedding").tensor.shape(), (Shape{5, toy.vocab.words.size()}));
}

TEST(JointModel, UnknownCharactersAndWordsAreAbsorbed) {
  Toy toy;
  for (auto rep : {Representation::kCharacters, Representation::kWords}) {
    auto cfg = small_config(toy.vocab, rep, true);
    JointModel<double> model(cfg);
    model.initialize(15);
    auto preds = model.predict(toy.batch({make("zqx ünïcödé play", "Other Other Other", "Music", "PlayMusic")}, cfg));
    ASSERT_EQ(preds.size(), 1u);
    EXPECT_EQ(preds[0].slots.size(), 3u);
  }
}

// ---------------------------------------------------------------- loss

EncodedBatch slot_batch(std::vector<Index> slots) {
  EncodedBatch b;
  b.batch_size = 1;
  b.seq_len = static_cast<Index>(slots.size());
  b.lengths = {b.seq_len};
  b.mask.assign(slots.size(), 1);
  b.slots = std::move(slots);
  b.domain = {0};
  b.intent = {0};
  return b;
}

TEST(JointModelLoss, TwoClassTwoTokenClosedForm) {
  Toy toy;
  auto cfg = small_config(toy.vocab, Representation::kWords, false, {.domain = false, .intent = false, .slot = true});
  cfg.slot_classes = 2;
  JointModel<double> model(cfg);
  JointOutput<double> out;
  // Token 0 scores (1.5, -0.5) with gold 0; token 1 scores (0.25, 2.0) with gold 0.
  out.slot_logits = Tensor<double>::from_values({2, 2}, {1.5, 0.25, -0.5, 2.0});
  out.token_positions = {0, 1};
  out.token_utterance = {0, 0};
  Tape<double> tape;
  auto terms = model.loss(tape, out, slot_batch({0, 0}));
  const double expected = 0.5 * (std::log1p(std::exp(-2.0)) + std::log1p(std::exp(1.75)));
  EXPECT_NEAR(terms.total.item(), expected, 1e-14);
  EXPECT_NEAR(terms.slot, expected, 1e-14);
}

TEST(JointModelLoss, SaturatedMarginIsNearZero) {
  Toy toy;
  auto cfg = small_config(toy.vocab, Representation::kWords, false, {.domain = false, .intent = false, .slot = true});
  cfg.slot_classes = 3;
  JointModel<double> model(cfg);
  JointOutput<double> out;
  out.slot_logits = Tensor<double>::from_values({3, 2}, {20.0, 0.0, 0.0, 0.0, 0.0, 20.0});
  out.token_positions = {0, 1};
  out.token_utterance = {0, 0};
  Tape<double> tape;
  EXPECT_LT(model.loss(tape, out, slot_batch({0, 2})).total.item(), 1e-6);
}

TEST(JointModelLoss, SingleTaskLossIsThatTaskCrossEntropy) {
  Toy toy;
  auto cfg = small_config(toy.vocab, Representation::kCharacters, false, {.domain = true, .intent = false, .slot = false});
  JointModel<double> model(cfg);
  model.initialize(16);
  auto batch = toy.batch(toy.corpus, cfg);
  Tape<double> tape;
  auto out = model.forward(tape, batch);
  auto terms = model.loss(tape, out, batch);
  // Independent evaluation in long double.
  long double total = 0;
  const auto& z = out.domain_logits->matrix();
  for (Index b = 0; b < z.cols(); ++b) {
    long double m = z.col(b).maxCoeff(), s = 0;
    for (Index r = 0; r < z.rows(); ++r) s += std::exp(static_cast<long double>(z(r, b)) - m);
    total += m + std::log(s) - z(batch.domain[static_cast<std::size_t>(b)], b);
  }
  total /= static_cast<long double>(z.cols());
  EXPECT_NEAR(terms.total.item(), static_cast<double>(total), 1e-13);
  EXPECT_EQ(terms.intent, 0.0);
  EXPECT_EQ(terms.slot, 0.0);
}

TEST(JointModelLoss, TotalIsSumOfTaskTerms) {
  Toy toy;
  auto cfg = small_config(toy.vocab, Representation::kCharacters, true);
  JointModel<double> model(cfg);
  model.initialize(17);
  auto batch = toy.batch(toy.corpus, cfg);
  Tape<double> tape;
  auto terms = model.loss(tape, model.forward(tape, batch), batch);
  EXPECT_NEAR(terms.total.item(), terms.domain + terms.intent + terms.slot, 1e-12);
}

TEST(JointModelLoss, OutOfRangeLabelIsRejected) {
  Toy toy;
  auto cfg = small_config(toy.vocab, Representation::kWords, false, {.domain = false, .intent = false, .slot = true});
  cfg.slot_classes = 2;
  JointModel<double> model(cfg);
  JointOutput<double> out;
  out.slot_logits = Tensor<double>::from_values({2, 2}, {1.0, 0.0, 0.0, 1.0});
  out.token_positions = {0, 1};
  out.token_utterance = {0, 0};
  Tape<double> tape;
  EXPECT_THROW(model.loss(tape, out, slot_batch({0, 2})), ValidationError);
  EXPECT_THROW(model.loss(tape, out, slot_batch({-1, 0})), ValidationError);
}

// ---------------------------------------------------------------- predict

TEST(JointModelPredict, DeterministicWithOneSlotPerToken) {
  Toy toy;
  auto cfg = small_config(toy.vocab, Representation::kCharacters, true);
  JointModel<double> model(cfg);
  model.initialize(18);
  auto batch = toy.batch(toy.corpus, cfg);
  auto a = model.predict(batch);
  auto b = model.predict(batch);
  ASSERT_EQ(a.size(), toy.corpus.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].slots.size(), toy.corpus[i].tokens.size());
    EXPECT_EQ(a[i].domain, b[i].domain);
    EXPECT_EQ(a[i].intent, b[i].intent);
    EXPECT_EQ(a[i].slots, b[i].slots);
    EXPECT_GE(*a[i].domain, 0);
    EXPECT_LT(*a[i].domain, cfg.domain_classes);
    EXPECT_GT(a[i].intent_probability, 0.0);
    EXPECT_LE(a[i].intent_probability, 1.0);
  }
}

TEST(JointModelPredict, ArgmaxInvariantToConstantLogitShift) {
  Toy toy;
  auto cfg = small_config(toy.vocab, Representation::kCharacters, true);
  JointModel<double> model(cfg);
  model.initialize(19);
  randomize(model.parameters(), 19, 1.0);
  auto batch = toy.batch(toy.corpus, cfg);
  auto before = model.predict(batch);
  // A shared output-bias offset adds the same constant to every logit of a head.
  for (const char* name : {"domain.output.bias", "intent.output.bias", "slot.output.bias"}) {
    Tensor<double> bias = model.parameters().at(name).tensor;
    for (auto& v : bias.mutable_data()) v += 37.5;
  }
  auto after = model.predict(batch);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(before[i].domain, after[i].domain);
    EXPECT_EQ(before[i].intent, after[i].intent);
    EXPECT_EQ(before[i].slots, after[i].slots);
  }
}

TEST(JointModelPredict, FloatModelRuns) {
  Toy toy;
  ModelConfig cfg = small_config(toy.vocab, Representation::kCharacters, true);
  cfg.precision = Precision::kFloat;
  JointModel<float> model(cfg);
  model.initialize(20);
  auto preds = model.predict(toy.batch(toy.corpus, cfg));
  EXPECT_EQ(preds[2].slots.size(), 4u);
}

// ---------------------------------------------------------------- gradients

struct Variant {
  Representation rep;
  bool links;
  TaskSet tasks;
};

class FullModelGradient : public ::testing::TestWithParam<Variant> {};

TEST_P(FullModelGradient, MatchesFiniteDifferences) {
  Toy toy;
  const auto v = GetParam();
  auto cfg = small_config(toy.vocab, v.rep, v.links, v.tasks);
  JointModel<double> model(cfg);
  auto batch = toy.batch({toy.corpus[0], toy.corpus[2]}, cfg);
  auto f = [&](Tape<double>& t) { return model.loss(t, model.forward(t, batch), batch).total; };
  for (std::uint64_t seed : {21, 22, 23}) {
    randomize(model.parameters(), seed);
    auto r = gradient_check(f, named(model.parameters()), {.samples_per_tensor = 12, .seed = seed});
    EXPECT_LT(r.max_relative_error, 1e-4)
        << r.worst_tensor << "[" << r.worst_index << "] " << r.worst_analytic << " vs " << r.worst_numeric;
    EXPECT_FALSE(r.saw_nan);
  }
}

constexpr TaskSet kAll{true, true, true};

INSTANTIATE_TEST_SUITE_P(
    Variants, FullModelGradient,
    ::testing::Values(Variant{Representation::kCharacters, true, kAll},
                      Variant{Representation::kCharacters, false, kAll},
                      Variant{Representation::kWords, true, kAll},
                      Variant{Representation::kWords, false, kAll},
                      Variant{Representation::kCharacters, false, {true, false, false}},
                      Variant{Representation::kCharacters, false, {false, true, false}},
                      Variant{Representation::kCharacters, false, {false, false, true}},
                      Variant{Representation::kWords, false, {true, false, true}},
                      Variant{Representation::kWords, false, {false, true, true}}));

}  // namespace
}  // namespace jointnlu
