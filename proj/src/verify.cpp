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

#include "jointnlu/verify.hpp"

#include "jointnlu/init.hpp"
#include "jointnlu/ops.hpp"

namespace jointnlu {

namespace {

using Store = ParameterStore<double>;

std::vector<NamedTensor> named(const Store& store, std::vector<NamedTensor> extra = {}) {
  for (const auto& p : store.all()) extra.push_back({p.name, p.tensor});
  return extra;
}

Tensor<double> random_tensor(Rng& rng, Shape shape, bool requires_grad, double scale = 1.0) {
  auto t = Tensor<double>::zeros(std::move(shape), requires_grad);
  for (auto& v : t.mutable_data()) v = rng.uniform(-scale, scale);
  return t;
}

// Xavier weights plus non-zero biases, so bias gradients are exercised.
void randomize(const Store& store, std::uint64_t seed) {
  initialize_parameters(store, seed);
  Rng rng(derive_seed(seed, "gradcheck-bias"));
  for (const auto& p : store.all()) {
    if (p.kind != ParamKind::kBias) continue;
    Tensor<double> t = p.tensor;
    for (auto& v : t.mutable_data()) v = rng.uniform(-0.3, 0.3);
  }
}

std::vector<Utterance> probe_corpus() {
  return {{{"play", "frozen", "from", "madonna"}, {"Other", "Songname", "Other", "ArtistName"}, "Music", "PlayMusic"},
          {{"will", "it", "rain", "in", "berlin"}, {"Other", "Other", "Other", "Other", "City"}, "Weather",
           "CheckRain"}};
}

}  // namespace

std::vector<GradientSuiteEntry> run_gradient_suite(const ModelConfig& shape, const GradientSuiteOptions& options) {
  GradientCheckOptions gc;
  gc.samples_per_tensor = options.samples_per_tensor;
  gc.seed = options.seed;
  gc.corrupt_backward = options.corrupt_backward;
  std::vector<GradientSuiteEntry> out;
  Rng rng(derive_seed(options.seed, "gradcheck-inputs"));
  const Index words = 5;  // sequence length for the context-level layers
  const Index width = shape.context_dim;

  {
    Store store;
    CompCnn<double> cnn(store, "char", 12, shape.char_dim, shape.char_filters, shape.word_dim);
    randomize(store, options.seed);
    const auto packed = PackedWords::pack({{1, 2}, {3, 4, 5, 6, 7, 8, 9}, {10, 10, 11, 2}}, cnn.min_width());
    const auto proj = random_tensor(rng, {shape.word_dim, 3}, false);
    auto f = [&](Tape<double>& t) { return sum(t, mul(t, cnn.forward(t, packed), proj)); };
    out.push_back({"char composition", gradient_check(f, named(store), gc)});
  }
  {
    Store store;
    Highway<double> hw(store, "highway", shape.word_dim);
    randomize(store, options.seed);
    const auto x = random_tensor(rng, {shape.word_dim, 3}, true);
    const auto proj = random_tensor(rng, {shape.word_dim, 3}, false);
    auto f = [&](Tape<double>& t) { return sum(t, mul(t, hw.forward(t, x), proj)); };
    out.push_back({"highway", gradient_check(f, named(store, {{"input", x}}), gc)});
  }
  {
    Store store;
    StackedCnn<double> cnn(store, "context", shape.word_dim, width, shape.context_width, shape.context_layers);
    randomize(store, options.seed);
    const auto x = random_tensor(rng, {shape.word_dim, words + 2}, true);
    const std::vector<std::uint8_t> mask{1, 1, 1, 1, 1, 0, 0};
    const auto proj = random_tensor(rng, {width, words + 2}, false);
    auto f = [&](Tape<double>& t) { return sum(t, mul(t, cnn.forward(t, x, mask), proj)); };
    out.push_back({"stacked context cnn", gradient_check(f, named(store, {{"input", x}}), gc)});
  }
  {
    Store store;
    OutputHead<double> head(store, "head", width, 6);
    randomize(store, options.seed);
    const auto contexts = random_tensor(rng, {width, words + 1}, true);
    const std::vector<std::uint8_t> mask{1, 1, 1, 1, 1, 0};
    auto f = [&](Tape<double>& t) {
      return softmax_cross_entropy(t, global_head_forward(t, head, contexts, mask), Index{2}).loss;
    };
    out.push_back({"global head", gradient_check(f, named(store, {{"contexts", contexts}}), gc)});
  }
  {
    Store store;
    OutputHead<double> head(store, "head", width, 7);
    randomize(store, options.seed);
    const auto x = random_tensor(rng, {width, words}, true);
    const std::vector<Index> targets{0, 3, 6, 3, 1};
    auto f = [&](Tape<double>& t) { return softmax_cross_entropy(t, head.forward(t, x), targets).loss; };
    out.push_back({"local head", gradient_check(f, named(store, {{"input", x}}), gc)});
  }
  for (const bool gated : {false, true}) {
    Store store;
    Link<double> link(store, "link", width, width, gated);
    randomize(store, options.seed);
    const auto upstream = random_tensor(rng, {width, 2}, true);
    const auto downstream = random_tensor(rng, {width, words}, true);
    const std::vector<Index> source{0, 0, 1, 1, 1};
    const auto proj = random_tensor(rng, {width, words}, false);
    auto f = [&](Tape<double>& t) { return sum(t, mul(t, link.forward(t, upstream, downstream, source), proj)); };
    out.push_back({gated ? "gated link" : "link",
                   gradient_check(f, named(store, {{"upstream", upstream}, {"downstream", downstream}}), gc)});
  }

  const auto corpus = probe_corpus();
  const auto vocab = build_vocabularies(corpus);
  for (const auto rep : {Representation::kCharacters, Representation::kWords}) {
    for (const bool links : {true, false}) {
      ModelConfig c = shape;
      c.representation = rep;
      c.links = links;
      c.tasks = {};
      c.precision = Precision::kDouble;
      c.set_vocabulary_sizes(vocab);
      JointModel<double> model(c);
      randomize(model.parameters(), options.seed);
      const auto batch = encode_batch(corpus, vocab, c.max_length, c.min_char_width());
      auto f = [&](Tape<double>& t) { return model.loss(t, model.forward(t, batch), batch).total; };
      const std::string name = std::string("model ") + (rep == Representation::kCharacters ? "char" : "word") +
                               (links ? " with links" : " without links");
      out.push_back({name, gradient_check(f, named(model.parameters()), gc)});
    }
  }
  return out;
}

}  // namespace jointnlu
