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

#include "jointnlu/gradcheck.hpp"
#include "jointnlu/ops.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace jointnlu {
namespace {

using testing::random_extent;
using testing::random_tensor;
using T = Tensor<double>;

TEST(Matmul, IdentityAndHandCases) {
  Tape<double> tape;
  auto eye = T::from_values({2, 2}, {1, 0, 0, 1});
  auto v = T::from_values({2, 1}, {3, 4});
  auto r = matmul(tape, eye, v);
  EXPECT_EQ(r.shape(), (Shape{2, 1}));
  EXPECT_EQ(r.data()[0], 3.0);
  EXPECT_EQ(r.data()[1], 4.0);

  auto row = T::from_values({1, 2}, {1, 2});
  EXPECT_EQ(matmul(tape, row, v).item(), 11.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Tape<double> tape;
  auto a = T::zeros({2, 3});
  auto b = T::zeros({2, 2});
  try {
    matmul(tape, a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos);
    EXPECT_NE(msg.find("[2, 2]"), std::string::npos);
  }
}

TEST(Matmul, MatchesTripleLoop) {
  Rng rng(11);
  {
    Tape<double> tape;
    auto a = random_tensor(rng, {3, 4});
    auto b = random_tensor(rng, {4, 2});
    auto c = matmul(tape, a, b);
    auto ref = oracle::matmul(a, b);
    for (Index i = 0; i < c.size(); ++i) EXPECT_EQ(c.data()[i], ref[i]);
  }
  for (int trial = 0; trial < 100; ++trial) {
    Tape<double> tape;
    const Index m = random_extent(rng, 1, 16), k = random_extent(rng, 1, 16), n = random_extent(rng, 1, 16);
    auto a = random_tensor(rng, {m, k});
    auto b = random_tensor(rng, {k, n});
    auto c = matmul(tape, a, b);
    auto ref = oracle::matmul(a, b);
    for (Index i = 0; i < c.size(); ++i) ASSERT_NEAR(c.data()[i], ref[i], 1e-12);
  }
}

TEST(Conv1d, HandCases) {
  Tape<double> tape;
  auto in = T::from_values({1, 3}, {1, 2, 3});
  auto w = T::from_values({1, 1, 2}, {1, 1});
  auto b = T::zeros({1});
  auto y = conv1d(tape, in, w, b, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 2}));
  EXPECT_EQ(y.data()[0], 3.0);
  EXPECT_EQ(y.data()[1], 5.0);

  Rng rng(3);
  auto any = random_tensor(rng, {4, 7});
  auto zero_filter = T::zeros({1, 4, 3});
  auto bias = T::from_values({1}, {0.25});
  auto constant = conv1d(tape, any, zero_filter, bias, 0);
  for (double v : constant.data()) EXPECT_EQ(v, 0.25);
}

TEST(Conv1d, SamePaddingKeepsLength) {
  Tape<double> tape;
  Rng rng(5);
  auto in = random_tensor(rng, {3, 5});
  auto w = random_tensor(rng, {2, 3, 3});
  auto b = random_tensor(rng, {2});
  EXPECT_EQ(conv1d(tape, in, w, b, 1).shape(), (Shape{2, 5}));
}

TEST(Conv1d, RejectsWindowWiderThanInput) {
  Tape<double> tape;
  auto in = T::zeros({1, 2});
  auto w = T::zeros({1, 1, 3});
  auto b = T::zeros({1});
  EXPECT_THROW(conv1d(tape, in, w, b, 0), ShapeError);
  EXPECT_NO_THROW(conv1d(tape, in, w, b, 1));
}

TEST(Conv1d, MatchesNestedLoops) {
  Rng rng(17);
  {
    Tape<double> tape;
    auto in = random_tensor(rng, {4, 9});
    auto w = random_tensor(rng, {3, 4, 3});
    auto b = random_tensor(rng, {3});
    auto y = conv1d(tape, in, w, b, 0);
    auto ref = oracle::conv1d(in, w, b, 0);
    for (Index i = 0; i < y.size(); ++i) EXPECT_NEAR(y.data()[i], ref[i], 1e-12);
  }
  for (int trial = 0; trial < 100; ++trial) {
    Tape<double> tape;
    const Index d = random_extent(rng, 1, 16), n = random_extent(rng, 1, 16);
    const Index f = random_extent(rng, 1, 16), l = random_extent(rng, 1, 6);
    const Index pad = random_extent(rng, 0, 3);
    if (n + 2 * pad < l) continue;
    auto in = random_tensor(rng, {d, n});
    auto w = random_tensor(rng, {f, d, l});
    auto b = random_tensor(rng, {f});
    auto y = conv1d(tape, in, w, b, pad);
    auto ref = oracle::conv1d(in, w, b, pad);
    ASSERT_EQ(y.size(), static_cast<Index>(ref.size()));
    for (Index i = 0; i < y.size(); ++i) ASSERT_NEAR(y.data()[i], ref[i], 1e-12);
  }
}

TEST(MaxOverTime, HandCases) {
  Tape<double> tape;
  auto x = T::from_values({1, 3}, {0.2, 0.9, 0.1});
  EXPECT_EQ(max_over_time(tape, x).item(), 0.9);
  auto y = T::from_values({1, 2}, {5, 7});
  const std::uint8_t mask[] = {1, 0};
  EXPECT_EQ(max_over_time(tape, y, mask).item(), 5.0);
  const std::uint8_t none[] = {0, 0};
  EXPECT_THROW(max_over_time(tape, y, none), ValidationError);
}

TEST(MaxOverTime, MatchesScan) {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    Tape<double> tape;
    const Index f = trial == 0 ? 6 : random_extent(rng, 1, 16);
    const Index n = trial == 0 ? 8 : random_extent(rng, 1, 16);
    auto x = random_tensor(rng, {f, n});
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n));
    for (auto& m : mask) m = trial == 0 ? 1 : rng.bernoulli(0.7);
    mask[static_cast<std::size_t>(rng.below(n))] = 1;
    auto pooled = max_over_time(tape, x, mask);
    const auto ref = oracle::max_over_time(x, mask);
    for (Index r = 0; r < f; ++r) ASSERT_EQ(pooled.data()[r], ref[r]);
  }
}

TEST(MaxOverTime, TiesRouteGradientToLowestIndex) {
  Tape<double> tape;
  auto x = T::from_values({1, 4}, {1, 3, 3, 2}, true);
  auto loss = sum(tape, max_over_time(tape, x));
  tape.backward(loss);
  const std::vector<double> expected = {0, 1, 0, 0};
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(x.grad()[i], expected[i]);
}

TEST(Elementwise, Definitions) {
  Tape<double> tape;
  auto x = T::from_values({2}, {-1, 2});
  auto r = relu(tape, x);
  EXPECT_EQ(r.data()[0], 0.0);
  EXPECT_EQ(r.data()[1], 2.0);
  EXPECT_EQ(sigmoid(tape, T::from_values({1}, {0})).item(), 0.5);
  auto p = mul(tape, T::from_values({2}, {1, 2}), T::from_values({2}, {3, 4}));
  EXPECT_EQ(p.data()[0], 3.0);
  EXPECT_EQ(p.data()[1], 8.0);
  EXPECT_THROW(add(tape, T::zeros({2}), T::zeros({3})), ShapeError);
  EXPECT_THROW(sub(tape, T::zeros({2, 1}), T::zeros({1, 2})), ShapeError);
}

TEST(SoftmaxCrossEntropy, UniformAndStable) {
  Tape<double> tape;
  auto r = softmax_cross_entropy(tape, T::from_values({2}, {0, 0}), 0);
  EXPECT_DOUBLE_EQ(r.probabilities(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(r.probabilities(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(r.loss.item(), std::log(2.0));

  auto big = softmax_cross_entropy(tape, T::from_values({2}, {1000, 0}), 0);
  EXPECT_TRUE(std::isfinite(big.loss.item()));
  EXPECT_NEAR(big.loss.item(), 0.0, 1e-300);
  EXPECT_THROW(softmax_cross_entropy(tape, T::from_values({2}, {0, 0}), 2), ValidationError);
}

TEST(SoftmaxCrossEntropy, MatchesExtendedPrecision) {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    Tape<double> tape;
    const Index c = trial == 0 ? 5 : random_extent(rng, 1, 16);
    const double scale = trial < 50 ? 5.0 : 1e4;
    auto z = random_tensor(rng, {c}, false, scale);
    const Index target = static_cast<Index>(rng.below(c));
    auto r = softmax_cross_entropy(tape, z, target);
    const auto ref = oracle::softmax({z.data().begin(), z.data().end()});
    double total = 0;
    for (Index i = 0; i < c; ++i) {
      ASSERT_NEAR(r.probabilities(i, 0), static_cast<double>(ref[i]), 1e-10);
      ASSERT_GE(r.probabilities(i, 0), 0.0);
      total += r.probabilities(i, 0);
    }
    ASSERT_NEAR(total, 1.0, 1e-9);
    const long double ref_loss = oracle::cross_entropy({z.data().begin(), z.data().end()}, target);
    ASSERT_NEAR(r.loss.item(), static_cast<double>(ref_loss), 1e-10 * std::max(1.0, static_cast<double>(ref_loss)));
  }
}

TEST(EmbeddingLookup, GatherAndAccumulate) {
  Tape<double> tape;
  auto table = T::from_values({2, 3}, {0, 1, 2, 10, 11, 12}, true);
  const Index idx[] = {2, 0};
  auto g = embedding_lookup(tape, table, idx);
  EXPECT_EQ(g.shape(), (Shape{2, 2}));
  EXPECT_EQ(g.matrix()(0, 0), 2.0);
  EXPECT_EQ(g.matrix()(1, 0), 12.0);
  EXPECT_EQ(g.matrix()(0, 1), 0.0);
  EXPECT_EQ(g.matrix()(1, 1), 10.0);

  Tape<double> tape2;
  const Index rep[] = {1, 1};
  auto h = embedding_lookup(tape2, table, rep);
  auto weights = T::from_values({2, 2}, {1, 2, 3, 4});
  auto loss = sum(tape2, mul(tape2, h, weights));
  table.zero_grad();
  tape2.backward(loss);
  EXPECT_EQ(table.grad_matrix()(0, 1), 3.0);
  EXPECT_EQ(table.grad_matrix()(1, 1), 7.0);
  EXPECT_EQ(table.grad_matrix()(0, 0), 0.0);

  const Index bad[] = {3};
  EXPECT_THROW(embedding_lookup(tape2, table, bad), ValidationError);
}

TEST(EmbeddingLookup, MatchesCopy) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    Tape<double> tape;
    const Index d = random_extent(rng, 1, 16), v = random_extent(rng, 1, 16), len = random_extent(rng, 1, 16);
    auto table = random_tensor(rng, {d, v});
    std::vector<Index> idx(static_cast<std::size_t>(len));
    for (auto& i : idx) i = static_cast<Index>(rng.below(v));
    auto out = embedding_lookup(tape, table, idx);
    for (Index r = 0; r < d; ++r)
      for (Index j = 0; j < len; ++j) ASSERT_EQ(out.data()[r * len + j], table.data()[r * v + idx[j]]);
  }
}

TEST(Backward, CalculusAndDisconnected) {
  Tape<double> tape;
  auto x = T::from_values({1}, {3}, true);
  auto p = T::from_values({1}, {7}, true);
  auto loss = mul(tape, x, x);
  x.zero_grad();
  p.zero_grad();
  tape.backward(loss);
  EXPECT_EQ(x.grad()[0], 6.0);
  EXPECT_EQ(p.grad()[0], 0.0);
  EXPECT_THROW(tape.backward(T::zeros({2})), ShapeError);
}

TEST(Backward, ReplayIsBitIdentical) {
  Rng rng(37);
  auto w = random_tensor(rng, {4, 6}, true);
  auto x = random_tensor(rng, {6, 5});
  Tape<double> tape;
  auto h = relu(tape, matmul(tape, w, x));
  auto loss = sum(tape, mul(tape, h, sigmoid(tape, h)));
  w.zero_grad();
  tape.backward(loss);
  std::vector<double> first(w.grad().begin(), w.grad().end());
  w.zero_grad();
  tape.backward(loss);
  for (Index i = 0; i < w.size(); ++i) ASSERT_EQ(w.grad()[i], first[i]);
}

TEST(Backward, SharedInputAccumulates) {
  Tape<double> tape;
  auto x = T::from_values({2}, {1.5, -2}, true);
  auto loss = sum(tape, add(tape, x, mul(tape, x, x)));
  x.zero_grad();
  tape.backward(loss);
  EXPECT_EQ(x.grad()[0], 1 + 2 * 1.5);
  EXPECT_EQ(x.grad()[1], 1 + 2 * -2.0);
}

// Autodiff vs central differences for every differentiable op.
TEST(GradientCheck, QuadraticIsExact) {
  Rng rng(41);
  auto x = random_tensor(rng, {7}, true);
  auto r = gradient_check([&](Tape<double>& t) { return sum(t, mul(t, x, x)); }, {{"x", x}});
  EXPECT_LT(r.max_relative_error, 1e-8);
}

TEST(GradientCheck, EveryOp) {
  Rng rng(43);
  auto a = random_tensor(rng, {4, 5}, true);
  auto b = random_tensor(rng, {5, 3}, true);
  auto bias = random_tensor(rng, {4}, true);
  auto seq = random_tensor(rng, {3, 9}, true);
  auto filt = random_tensor(rng, {4, 3, 3}, true);
  auto fb = random_tensor(rng, {4}, true);
  auto table = random_tensor(rng, {4, 6}, true);
  auto target = random_tensor(rng, {4, 3});
  std::vector<NamedTensor> params = {{"a", a}, {"b", b}, {"bias", bias}, {"seq", seq},
                                     {"filt", filt}, {"fb", fb}, {"table", table}};
  const std::uint8_t mask[] = {1, 1, 0, 1, 1, 1, 1, 0, 1};
  const Index idx[] = {5, 0, 5};
  const Index targets[] = {0, 3, 1};
  const double weights[] = {0.5, 1.0, 2.0};
  auto f = [&](Tape<double>& t) {
    auto h = add_bias(t, matmul(t, a, b), bias);                                  // [4, 3]
    auto c = relu(t, conv1d(t, seq, filt, fb, 1));                                // [4, 9]
    auto pooled = max_over_time(t, mask_columns(t, c, mask), mask);               // [4]
    auto e = embedding_lookup(t, table, idx);                                     // [4, 3]
    auto gate = sigmoid(t, e);
    auto mixed = sub(t, mul(t, gate, h), mul(t, h, target));
    auto cat = concat_rows(t, std::vector<Tensor<double>>{mixed, e});             // [8, 3]
    auto ce = softmax_cross_entropy(t, cat, std::span<const Index>(targets), std::span<const double>(weights)).loss;
    auto pooled_col = gather_columns(t, matmul(t, a, b), std::vector<Index>{2, -1});
    auto se = squared_error(t, pooled_col, RowMatrix<double>(RowMatrix<double>::Ones(4, 2)));
    return add(t, add(t, ce, se), sum(t, pooled));
  };
  auto r = gradient_check(f, params, GradientCheckOptions{.samples_per_tensor = 64});
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_tensor << "[" << r.worst_index << "]";
  EXPECT_FALSE(r.saw_nan);
  EXPECT_GT(r.coordinates, 60u);
}

TEST(GradientCheck, DetectsCorruptedBackward) {
  Rng rng(47);
  auto x = random_tensor(rng, {6}, true);
  auto f = [&](Tape<double>& t) { return sum(t, sigmoid(t, x)); };
  GradientCheckOptions opts;
  opts.corrupt_backward = OpKind::kSigmoid;
  EXPECT_GT(gradient_check(f, {{"x", x}}, opts).max_relative_error, 1e-2);
  EXPECT_LT(gradient_check(f, {{"x", x}}).max_relative_error, 1e-4);
}

TEST(TensorInvariants, GradMatchesDataLength) {
  auto t = T::zeros({3, 4, 2}, true);
  EXPECT_EQ(t.size(), 24);
  EXPECT_EQ(t.rows(), 3);
  EXPECT_EQ(t.cols(), 8);
  EXPECT_FALSE(t.has_grad());
  t.zero_grad();
  EXPECT_EQ(static_cast<Index>(t.grad().size()), t.size());
  EXPECT_THROW(T::zeros({3, 0}), ShapeError);
  EXPECT_THROW(T::from_values({2}, {1, 2, 3}), ShapeError);
}

}  // namespace
}  // namespace jointnlu
