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

#include <span>
#include <vector>

#include "jointnlu/tensor.hpp"

// Differentiable ops recorded on a Tape. Shapes follow the features x time
// convention: a sequence of n vectors of width d is a [d, n] tensor. There is
// no broadcasting except add_bias over the time axis.
namespace jointnlu {

// [m, k] x [k, n] -> [m, n]; a rank-1 right operand [k] yields [m].
template <typename Scalar>
Tensor<Scalar> matmul(Tape<Scalar>& tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b);

// x: [m, n] or [m]; bias: [m], added to every column.
template <typename Scalar>
Tensor<Scalar> add_bias(Tape<Scalar>& tape, const Tensor<Scalar>& x, const Tensor<Scalar>& bias);

// Stride-1 cross-correlation over a zero-padded input.
// input [d, n], filters [f, d, l], bias [f] -> [f, n - l + 1 + 2 * padding].
template <typename Scalar>
Tensor<Scalar> conv1d(Tape<Scalar>& tape, const Tensor<Scalar>& input, const Tensor<Scalar>& filters,
                      const Tensor<Scalar>& bias, Index padding);

// Per-row maximum over the unmasked columns of [f, n] -> [f]. An empty mask
// means every column is live. Ties resolve to the lowest column index.
template <typename Scalar>
Tensor<Scalar> max_over_time(Tape<Scalar>& tape, const Tensor<Scalar>& input, std::span<const std::uint8_t> mask = {});

// Grouped form of max_over_time: column g of the [f, G] result is the max over
// input columns groups[g] (ascending indices). Used to pool many words or
// utterances that share one long tensor.
template <typename Scalar>
Tensor<Scalar> max_over_groups(Tape<Scalar>& tape, const Tensor<Scalar>& input,
                               const std::vector<std::vector<Index>>& groups);

template <typename Scalar>
Tensor<Scalar> relu(Tape<Scalar>& tape, const Tensor<Scalar>& x);

template <typename Scalar>
Tensor<Scalar> sigmoid(Tape<Scalar>& tape, const Tensor<Scalar>& x);

template <typename Scalar>
Tensor<Scalar> add(Tape<Scalar>& tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b);

template <typename Scalar>
Tensor<Scalar> sub(Tape<Scalar>& tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b);

template <typename Scalar>
Tensor<Scalar> mul(Tape<Scalar>& tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b);

// Zeroes the columns of [m, n] whose mask entry is 0.
template <typename Scalar>
Tensor<Scalar> mask_columns(Tape<Scalar>& tape, const Tensor<Scalar>& x, std::span<const std::uint8_t> mask);

// Column gather from [m, V]; index -1 produces a zero column. Backward
// scatter-adds, so repeated indices accumulate.
template <typename Scalar>
Tensor<Scalar> gather_columns(Tape<Scalar>& tape, const Tensor<Scalar>& x, std::span<const Index> indices);

// gather_columns restricted to valid indices into a [d, V] table.
template <typename Scalar>
Tensor<Scalar> embedding_lookup(Tape<Scalar>& tape, const Tensor<Scalar>& table, std::span<const Index> indices);

template <typename Scalar>
Tensor<Scalar> concat_rows(Tape<Scalar>& tape, const std::vector<Tensor<Scalar>>& parts);

template <typename Scalar>
struct SoftmaxLoss {
  Tensor<Scalar> loss;              // [1]
  RowMatrix<Scalar> probabilities;  // same layout as the logits
};

// Column-wise softmax + cross entropy. loss = sum_j weights[j] * -log p_j[target_j];
// an empty weight span means weight 1 for every column.
template <typename Scalar>
SoftmaxLoss<Scalar> softmax_cross_entropy(Tape<Scalar>& tape, const Tensor<Scalar>& logits,
                                          std::span<const Index> targets, std::span<const Scalar> weights = {});

template <typename Scalar>
SoftmaxLoss<Scalar> softmax_cross_entropy(Tape<Scalar>& tape, const Tensor<Scalar>& logits, Index target) {
  return softmax_cross_entropy(tape, logits, std::span<const Index>(&target, 1));
}

// Mean over columns of the squared L2 distance between pred and target.
template <typename Scalar>
Tensor<Scalar> squared_error(Tape<Scalar>& tape, const Tensor<Scalar>& pred, const RowMatrix<Scalar>& target);

template <typename Scalar>
Tensor<Scalar> sum(Tape<Scalar>& tape, const Tensor<Scalar>& x);

// Max-subtracted column softmax, no tape.
template <typename Scalar>
RowMatrix<Scalar> softmax_columns(const Eigen::Ref<const RowMatrix<Scalar>>& logits);

}  // namespace jointnlu
