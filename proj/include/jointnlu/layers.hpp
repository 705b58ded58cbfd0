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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "jointnlu/ops.hpp"

namespace jointnlu {

enum class ParamKind { kWeight, kBias, kEmbedding };

template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> tensor;
  ParamKind kind;
};

// Ordered, name-addressed parameter container shared by all layers of a model.
template <typename Scalar>
class ParameterStore {
 public:
  Tensor<Scalar> add(const std::string& name, Shape shape, ParamKind kind) {
    if (index_.count(name)) throw ValidationError("duplicate parameter '" + name + "'");
    auto t = Tensor<Scalar>::zeros(std::move(shape), true);
    index_[name] = params_.size();
    params_.push_back({name, t, kind});
    return t;
  }

  const std::vector<Parameter<Scalar>>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }

  const Parameter<Scalar>* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second];
  }

  const Parameter<Scalar>& at(const std::string& name) const {
    if (const auto* p = find(name)) return *p;
    throw ValidationError("no parameter named '" + name + "'");
  }

  void zero_grad() const {
    for (const auto& p : params_) p.tensor.zero_grad();
  }

  Index scalar_count() const {
    Index n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
  }

 private:
  std::vector<Parameter<Scalar>> params_;
  std::map<std::string, std::size_t> index_;
};

// y = t * relu(W_H x + b_H) + (1 - t) * x with t = sigmoid(W_T x + b_T).
// Columns of x are independent inputs.
template <typename Scalar>
class Highway {
 public:
  Highway() = default;
  Highway(ParameterStore<Scalar>& store, const std::string& prefix, Index width);

  Tensor<Scalar> forward(Tape<Scalar>& tape, const Tensor<Scalar>& x) const;
  // Gate activations for x, for inspection.
  Tensor<Scalar> gate(Tape<Scalar>& tape, const Tensor<Scalar>& x) const;

  Index width() const { return width_; }
  const Tensor<Scalar>& transform_weight() const { return w_h_; }
  const Tensor<Scalar>& transform_bias() const { return b_h_; }
  const Tensor<Scalar>& gate_weight() const { return w_t_; }
  const Tensor<Scalar>& gate_bias() const { return b_t_; }

 private:
  Index width_ = 0;
  Tensor<Scalar> w_h_, b_h_, w_t_, b_t_;
};

struct CharFilter {
  Index width;
  Index channels;

  bool operator==(const CharFilter&) const = default;
};

inline const std::vector<CharFilter>& default_char_filters() {
  static const std::vector<CharFilter> filters = {{3, 50}, {4, 75}, {5, 75}, {6, 150}};
  return filters;
}

// Words laid end to end for one batched CompCNN pass. Each word occupies
// max(length, min_width) slots, right-padded with the PAD character (index 0).
struct PackedWords {
  std::vector<Index> chars;    // all words end to end, each PAD-extended to min_width
  std::vector<Index> offsets;  // start of each word in chars
  std::vector<Index> lengths;  // unpadded lengths

  std::size_t count() const { return offsets.size(); }
  Index padded_width(std::size_t i) const {
    const Index end = i + 1 < offsets.size() ? offsets[i + 1] : static_cast<Index>(chars.size());
    return end - offsets[i];
  }
  static PackedWords pack(const std::vector<std::vector<Index>>& words, Index min_width);
};

// Character-to-word composition: char embeddings, one convolution bank per
// filter width with ReLU and max-over-time over the word's character windows,
// concatenation, then a linear projection to the word width.
template <typename Scalar>
class CompCnn {
 public:
  CompCnn() = default;
  CompCnn(ParameterStore<Scalar>& store, const std::string& prefix, Index vocab_size, Index char_dim,
          std::vector<CharFilter> filters, Index word_dim);

  // [word_dim, words.count()]
  Tensor<Scalar> forward(Tape<Scalar>& tape, const PackedWords& words) const;
  // [word_dim] for a single unpadded character-index sequence.
  Tensor<Scalar> forward_word(Tape<Scalar>& tape, std::span<const Index> chars) const;
  // The [sum(channels), words] pooled features before projection.
  Tensor<Scalar> pooled_features(Tape<Scalar>& tape, const PackedWords& words) const;

  Index min_width() const { return min_width_; }
  Index feature_width() const { return feature_width_; }
  Index word_dim() const { return word_dim_; }
  Index vocab_size() const { return vocab_size_; }
  const Tensor<Scalar>& char_table() const { return table_; }
  const std::vector<Tensor<Scalar>>& filter_banks() const { return filters_; }
  const std::vector<Tensor<Scalar>>& filter_biases() const { return biases_; }
  const std::vector<CharFilter>& filter_spec() const { return spec_; }

 private:
  Index vocab_size_ = 0, char_dim_ = 0, word_dim_ = 0, min_width_ = 0, feature_width_ = 0;
  std::vector<CharFilter> spec_;
  Tensor<Scalar> table_;
  std::vector<Tensor<Scalar>> filters_, biases_;
  Tensor<Scalar> proj_w_, proj_b_;
};

// Same-padded convolution stack over word vectors; padding positions are
// zeroed after every layer.
template <typename Scalar>
class StackedCnn {
 public:
  StackedCnn() = default;
  StackedCnn(ParameterStore<Scalar>& store, const std::string& prefix, Index in_dim, Index filters, Index width,
             Index layers);

  // x: [in_dim, n] -> [filters, n]
  Tensor<Scalar> forward(Tape<Scalar>& tape, const Tensor<Scalar>& x, std::span<const std::uint8_t> mask) const;

  Index out_dim() const { return filters_; }
  Index receptive_field() const { return 1 + layers_ * (width_ - 1); }

 private:
  Index in_dim_ = 0, filters_ = 0, width_ = 0, layers_ = 0;
  std::vector<Tensor<Scalar>> weights_, biases_;
};

// Highway sublayer followed by a fully connected projection to class logits.
template <typename Scalar>
class OutputHead {
 public:
  OutputHead() = default;
  OutputHead(ParameterStore<Scalar>& store, const std::string& prefix, Index width, Index classes);

  Tensor<Scalar> hidden(Tape<Scalar>& tape, const Tensor<Scalar>& x) const;
  Tensor<Scalar> logits(Tape<Scalar>& tape, const Tensor<Scalar>& hidden) const;
  // Local-context head: [width, T] -> [classes, T].
  Tensor<Scalar> forward(Tape<Scalar>& tape, const Tensor<Scalar>& x) const { return logits(tape, hidden(tape, x)); }

  Index width() const { return width_; }
  Index classes() const { return classes_; }
  const Highway<Scalar>& highway() const { return highway_; }

 private:
  Index width_ = 0, classes_ = 0;
  Highway<Scalar> highway_;
  Tensor<Scalar> w_out_, b_out_;
};

// Global-context head on a single utterance: masked max-over-time of the
// [width, n] contexts, then the head. Returns [classes].
template <typename Scalar>
Tensor<Scalar> global_head_forward(Tape<Scalar>& tape, const OutputHead<Scalar>& head, const Tensor<Scalar>& contexts,
                                   std::span<const std::uint8_t> mask);

// Upstream-to-downstream link. Ungated: x + relu(W u + b). Gated:
// x + sigmoid(W_g x + b_g) * relu(W u + b).
template <typename Scalar>
class Link {
 public:
  Link() = default;
  Link(ParameterStore<Scalar>& store, const std::string& prefix, Index upstream_width, Index downstream_width,
       bool gated);

  // upstream [k, B], downstream [m, T]. source[j] names the upstream column
  // feeding downstream column j; empty means column j reads column j.
  Tensor<Scalar> forward(Tape<Scalar>& tape, const Tensor<Scalar>& upstream, const Tensor<Scalar>& downstream,
                         std::span<const Index> source = {}) const;

  bool gated() const { return gated_; }
  const Tensor<Scalar>& weight() const { return w_; }
  const Tensor<Scalar>& bias() const { return b_; }
  const Tensor<Scalar>& gate_weight() const { return w_gate_; }
  const Tensor<Scalar>& gate_bias() const { return b_gate_; }

 private:
  Index upstream_width_ = 0, downstream_width_ = 0;
  bool gated_ = false;
  Tensor<Scalar> w_, b_, w_gate_, b_gate_;
};

}  // namespace jointnlu
