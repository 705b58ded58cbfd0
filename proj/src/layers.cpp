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

#include "jointnlu/layers.hpp"

#include <algorithm>

namespace jointnlu {

template <typename Scalar>
Highway<Scalar>::Highway(ParameterStore<Scalar>& store, const std::string& prefix, Index width) : width_(width) {
  w_h_ = store.add(prefix + ".transform.weight", {width, width}, ParamKind::kWeight);
  b_h_ = store.add(prefix + ".transform.bias", {width}, ParamKind::kBias);
  w_t_ = store.add(prefix + ".gate.weight", {width, width}, ParamKind::kWeight);
  b_t_ = store.add(prefix + ".gate.bias", {width}, ParamKind::kBias);
}

template <typename Scalar>
Tensor<Scalar> Highway<Scalar>::gate(Tape<Scalar>& tape, const Tensor<Scalar>& x) const {
  if (x.rows() != width_) {
    throw ShapeError("highway: input " + shape_string(x.shape()) + " does not match width " + std::to_string(width_));
  }
  return sigmoid(tape, add_bias(tape, matmul(tape, w_t_, x), b_t_));
}

template <typename Scalar>
Tensor<Scalar> Highway<Scalar>::forward(Tape<Scalar>& tape, const Tensor<Scalar>& x) const {
  auto t = gate(tape, x);
  auto h = relu(tape, add_bias(tape, matmul(tape, w_h_, x), b_h_));
  // t*h + (1-t)*x == x + t*(h - x)
  return add(tape, x, mul(tape, t, sub(tape, h, x)));
}

PackedWords PackedWords::pack(const std::vector<std::vector<Index>>& words, Index min_width) {
  PackedWords packed;
  packed.offsets.reserve(words.size());
  packed.lengths.reserve(words.size());
  for (const auto& w : words) {
    if (w.empty()) throw ValidationError("compcnn: empty word");
    const Index len = static_cast<Index>(w.size());
    const Index slots = std::max(len, min_width);
    packed.offsets.push_back(static_cast<Index>(packed.chars.size()));
    packed.lengths.push_back(len);
    packed.chars.insert(packed.chars.end(), w.begin(), w.end());
    packed.chars.insert(packed.chars.end(), static_cast<std::size_t>(slots - len), Index{0});
  }
  return packed;
}

template <typename Scalar>
CompCnn<Scalar>::CompCnn(ParameterStore<Scalar>& store, const std::string& prefix, Index vocab_size, Index char_dim,
                         std::vector<CharFilter> filters, Index word_dim)
    : vocab_size_(vocab_size), char_dim_(char_dim), word_dim_(word_dim), spec_(std::move(filters)) {
  if (spec_.empty()) throw ValidationError("compcnn: no filter banks configured");
  table_ = store.add(prefix + ".char_embedding", {char_dim, vocab_size}, ParamKind::kEmbedding);
  for (const auto& f : spec_) {
    if (f.width < 1 || f.channels < 1) throw ValidationError("compcnn: invalid filter bank");
    const std::string name = prefix + ".conv" + std::to_string(f.width);
    filters_.push_back(store.add(name + ".weight", {f.channels, char_dim, f.width}, ParamKind::kWeight));
    biases_.push_back(store.add(name + ".bias", {f.channels}, ParamKind::kBias));
    min_width_ = std::max(min_width_, f.width);
    feature_width_ += f.channels;
  }
  proj_w_ = store.add(prefix + ".projection.weight", {word_dim, feature_width_}, ParamKind::kWeight);
  proj_b_ = store.add(prefix + ".projection.bias", {word_dim}, ParamKind::kBias);
}

template <typename Scalar>
Tensor<Scalar> CompCnn<Scalar>::pooled_features(Tape<Scalar>& tape, const PackedWords& words) const {
  if (words.count() == 0) throw ValidationError("compcnn: no words");
  for (std::size_t w = 0; w < words.count(); ++w) {
    const Index end = w + 1 < words.count() ? words.offsets[w + 1] : static_cast<Index>(words.chars.size());
    if (end - words.offsets[w] < std::max(words.lengths[w], min_width_)) {
      throw ValidationError("compcnn: word " + std::to_string(w) + " is not padded to the minimum width");
    }
  }
  auto chars = embedding_lookup(tape, table_, words.chars);
  std::vector<Tensor<Scalar>> pooled;
  pooled.reserve(spec_.size());
  for (std::size_t i = 0; i < spec_.size(); ++i) {
    const Index l = spec_[i].width;
    auto features = relu(tape, conv1d(tape, chars, filters_[i], biases_[i], 0));
    // Windows that start past max(len, l) - l would only see trailing PADs.
    std::vector<std::vector<Index>> groups(words.count());
    for (std::size_t w = 0; w < words.count(); ++w) {
      const Index windows = std::max(words.lengths[w], l) - l + 1;
      groups[w].resize(static_cast<std::size_t>(windows));
      for (Index k = 0; k < windows; ++k) groups[w][static_cast<std::size_t>(k)] = words.offsets[w] + k;
    }
    pooled.push_back(max_over_groups(tape, features, groups));
  }
  return concat_rows(tape, pooled);
}

template <typename Scalar>
Tensor<Scalar> CompCnn<Scalar>::forward(Tape<Scalar>& tape, const PackedWords& words) const {
  auto features = pooled_features(tape, words);
  return add_bias(tape, matmul(tape, proj_w_, features), proj_b_);
}

template <typename Scalar>
Tensor<Scalar> CompCnn<Scalar>::forward_word(Tape<Scalar>& tape, std::span<const Index> chars) const {
  auto packed = PackedWords::pack({std::vector<Index>(chars.begin(), chars.end())}, min_width_);
  auto out = forward(tape, packed);
  auto vec = Tensor<Scalar>::zeros({word_dim_}, out.requires_grad());
  vec.mutable_matrix() = out.matrix();
  tape.record(OpKind::kGatherColumns, vec, [out, vec] { out.grad_accumulator() += vec.grad_matrix(); });
  return vec;
}

template <typename Scalar>
StackedCnn<Scalar>::StackedCnn(ParameterStore<Scalar>& store, const std::string& prefix, Index in_dim, Index filters,
                               Index width, Index layers)
    : in_dim_(in_dim), filters_(filters), width_(width), layers_(layers) {
  if (width % 2 == 0) throw ValidationError("stacked cnn: filter width must be odd for same padding");
  if (layers < 1) throw ValidationError("stacked cnn: at least one layer required");
  Index depth = in_dim;
  for (Index i = 0; i < layers; ++i) {
    const std::string name = prefix + ".layer" + std::to_string(i + 1);
    weights_.push_back(store.add(name + ".weight", {filters, depth, width}, ParamKind::kWeight));
    biases_.push_back(store.add(name + ".bias", {filters}, ParamKind::kBias));
    depth = filters;
  }
}

template <typename Scalar>
Tensor<Scalar> StackedCnn<Scalar>::forward(Tape<Scalar>& tape, const Tensor<Scalar>& x,
                                           std::span<const std::uint8_t> mask) const {
  if (x.rank() != 2 || x.rows() != in_dim_) {
    throw ShapeError("stacked cnn: input " + shape_string(x.shape()) + " does not have " + std::to_string(in_dim_) +
                     " rows");
  }
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
    throw ValidationError("stacked cnn: every position is padding");
  }
  auto h = mask_columns(tape, x, mask);
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    h = mask_columns(tape, relu(tape, conv1d(tape, h, weights_[i], biases_[i], (width_ - 1) / 2)), mask);
  }
  return h;
}

template <typename Scalar>
OutputHead<Scalar>::OutputHead(ParameterStore<Scalar>& store, const std::string& prefix, Index width, Index classes)
    : width_(width), classes_(classes), highway_(store, prefix + ".highway", width) {
  if (classes < 1) throw ValidationError("output head '" + prefix + "' needs at least one class");
  w_out_ = store.add(prefix + ".output.weight", {classes, width}, ParamKind::kWeight);
  b_out_ = store.add(prefix + ".output.bias", {classes}, ParamKind::kBias);
}

template <typename Scalar>
Tensor<Scalar> OutputHead<Scalar>::hidden(Tape<Scalar>& tape, const Tensor<Scalar>& x) const {
  return highway_.forward(tape, x);
}

template <typename Scalar>
Tensor<Scalar> OutputHead<Scalar>::logits(Tape<Scalar>& tape, const Tensor<Scalar>& hidden) const {
  return add_bias(tape, matmul(tape, w_out_, hidden), b_out_);
}

template <typename Scalar>
Tensor<Scalar> global_head_forward(Tape<Scalar>& tape, const OutputHead<Scalar>& head, const Tensor<Scalar>& contexts,
                                   std::span<const std::uint8_t> mask) {
  return head.forward(tape, max_over_time(tape, contexts, mask));
}

template <typename Scalar>
Link<Scalar>::Link(ParameterStore<Scalar>& store, const std::string& prefix, Index upstream_width,
                   Index downstream_width, bool gated)
    : upstream_width_(upstream_width), downstream_width_(downstream_width), gated_(gated) {
  w_ = store.add(prefix + ".weight", {downstream_width, upstream_width}, ParamKind::kWeight);
  b_ = store.add(prefix + ".bias", {downstream_width}, ParamKind::kBias);
  if (gated) {
    w_gate_ = store.add(prefix + ".gate.weight", {downstream_width, downstream_width}, ParamKind::kWeight);
    b_gate_ = store.add(prefix + ".gate.bias", {downstream_width}, ParamKind::kBias);
  }
}

template <typename Scalar>
Tensor<Scalar> Link<Scalar>::forward(Tape<Scalar>& tape, const Tensor<Scalar>& upstream,
                                     const Tensor<Scalar>& downstream, std::span<const Index> source) const {
  if (upstream.rows() != upstream_width_ || downstream.rows() != downstream_width_) {
    throw ShapeError("link: expected upstream width " + std::to_string(upstream_width_) + " and downstream width " +
                     std::to_string(downstream_width_) + ", got " + shape_string(upstream.shape()) + " and " +
                     shape_string(downstream.shape()));
  }
  auto y = relu(tape, add_bias(tape, matmul(tape, w_, upstream), b_));
  if (!source.empty()) {
    if (static_cast<Index>(source.size()) != downstream.cols()) {
      throw ShapeError("link: source map length does not match downstream columns");
    }
    y = gather_columns(tape, y, source);
  } else if (y.shape() != downstream.shape()) {
    throw ShapeError("link: upstream " + shape_string(upstream.shape()) + " cannot feed downstream " +
                     shape_string(downstream.shape()));
  }
  if (gated_) {
    auto g = sigmoid(tape, add_bias(tape, matmul(tape, w_gate_, downstream), b_gate_));
    y = mul(tape, g, y);
  }
  return add(tape, y, downstream);
}

template class Highway<float>;
template class Highway<double>;
template class CompCnn<float>;
template class CompCnn<double>;
template class StackedCnn<float>;
template class StackedCnn<double>;
template class OutputHead<float>;
template class OutputHead<double>;
template class Link<float>;
template class Link<double>;
template Tensor<float> global_head_forward(Tape<float>&, const OutputHead<float>&, const Tensor<float>&,
                                           std::span<const std::uint8_t>);
template Tensor<double> global_head_forward(Tape<double>&, const OutputHead<double>&, const Tensor<double>&,
                                            std::span<const std::uint8_t>);

}  // namespace jointnlu
