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

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jointnlu/errors.hpp"

namespace jointnlu {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

std::string shape_string(const Shape& shape);

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

// Dense row-major array with an optional gradient buffer. A Tensor is a
// cheap handle; copies share storage. Every tensor views as a matrix of
// shape[0] rows by product(shape[1:]) columns, so a [f, d, l] filter bank is
// an f x (d*l) matrix and a [c] vector is a c x 1 column.
template <typename Scalar>
class Tensor {
 public:
  using Matrix = RowMatrix<Scalar>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    validate(shape);
    Tensor t;
    t.impl_ = std::make_shared<Storage>();
    t.impl_->shape = std::move(shape);
    t.impl_->value = ColVector<Scalar>::Zero(shape_size(t.impl_->shape));
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static Tensor from_values(Shape shape, std::span<const Scalar> values, bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    if (static_cast<Index>(values.size()) != t.size()) {
      throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " +
                       shape_string(t.shape()));
    }
    std::copy(values.begin(), values.end(), t.impl_->value.data());
    return t;
  }

  static Tensor from_values(Shape shape, std::initializer_list<Scalar> values, bool requires_grad = false) {
    return from_values(std::move(shape), std::span<const Scalar>(values.begin(), values.size()), requires_grad);
  }

  template <typename Derived>
  static Tensor from_matrix(const Eigen::MatrixBase<Derived>& m, bool requires_grad = false) {
    Tensor t = zeros({m.rows(), m.cols()}, requires_grad);
    t.mutable_matrix() = m.template cast<Scalar>();
    return t;
  }

  explicit operator bool() const { return static_cast<bool>(impl_); }
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  const Shape& shape() const { return impl_->shape; }
  Index rank() const { return static_cast<Index>(impl_->shape.size()); }
  Index size() const { return impl_->value.size(); }
  Index rows() const { return impl_->shape.front(); }
  Index cols() const { return size() / rows(); }

  std::span<const Scalar> data() const { return {impl_->value.data(), static_cast<std::size_t>(size())}; }
  std::span<Scalar> mutable_data() { return {impl_->value.data(), static_cast<std::size_t>(size())}; }
  ConstMatrixMap matrix() const { return ConstMatrixMap(impl_->value.data(), rows(), cols()); }
  MatrixMap mutable_matrix() { return MatrixMap(impl_->value.data(), rows(), cols()); }
  Scalar item() const {
    if (size() != 1) throw ShapeError("item: tensor of shape " + shape_string(shape()) + " is not a scalar");
    return impl_->value[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }

  bool has_grad() const { return impl_->grad.size() == size(); }
  std::span<const Scalar> grad() const {
    if (!has_grad()) return {};
    return {impl_->grad.data(), static_cast<std::size_t>(size())};
  }
  ConstMatrixMap grad_matrix() const {
    ensure_grad();
    return ConstMatrixMap(impl_->grad.data(), rows(), cols());
  }
  // Gradient accumulator; allocated zeroed on first access.
  MatrixMap grad_accumulator() const {
    ensure_grad();
    return MatrixMap(impl_->grad.data(), rows(), cols());
  }
  void zero_grad() const {
    if (impl_->grad.size() == size()) {
      impl_->grad.setZero();
    } else {
      impl_->grad = ColVector<Scalar>::Zero(size());
    }
  }
  void drop_grad() const { impl_->grad.resize(0); }

  Tensor clone() const {
    Tensor t = zeros(shape(), requires_grad());
    t.impl_->value = impl_->value;
    return t;
  }

 private:
  struct Storage {
    Shape shape;
    ColVector<Scalar> value;
    ColVector<Scalar> grad;
    bool requires_grad = false;
  };

  static void validate(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor: rank-0 shapes are not supported, use [1]");
    for (Index extent : shape) {
      if (extent <= 0) throw ShapeError("tensor: non-positive extent in shape " + shape_string(shape));
    }
  }

  void ensure_grad() const {
    if (impl_->grad.size() != size()) impl_->grad = ColVector<Scalar>::Zero(size());
  }

  std::shared_ptr<Storage> impl_;
};

// Op identifiers; used for diagnostics and for the backward-fault hook that
// the gradient checker's sensitivity test relies on.
enum class OpKind : std::uint8_t {
  kNone,
  kMatmul,
  kAddBias,
  kConv1d,
  kMaxOverTime,
  kRelu,
  kSigmoid,
  kAdd,
  kSub,
  kMul,
  kMaskColumns,
  kGatherColumns,
  kConcatRows,
  kSoftmaxCrossEntropy,
  kSquaredError,
  kSum,
};

OpKind op_kind_from_name(const std::string& name);

// Ordered record of executed ops. backward() replays the record in reverse.
// Single-threaded; independent tapes may live on separate threads.
template <typename Scalar>
class Tape {
 public:
  using Backward = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers an op output. The backward closure is stored only when the
  // output participates in differentiation.
  void record(OpKind kind, const Tensor<Scalar>& output, Backward backward) {
    if (!recording_ || !output.requires_grad()) return;
    entries_.push_back(Entry{kind, output, std::move(backward)});
  }

  void backward(const Tensor<Scalar>& loss) {
    if (loss.size() != 1) {
      throw ShapeError("backward: loss must be a scalar, got shape " + shape_string(loss.shape()));
    }
    if (!loss.requires_grad()) return;
    for (auto& e : entries_) e.output.zero_grad();
    loss.grad_accumulator()(0, 0) = Scalar(1);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) it->backward();
  }

  std::size_t size() const { return entries_.size(); }

  // Inference mode: ops still run but nothing is kept for backward.
  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }
  OpKind kind_at(std::size_t i) const { return entries_[i].kind; }

  // Piecewise-branch fingerprint (ReLU signs, max-pool winners). Enabled by
  // the gradient checker to detect finite differences straddling a kink.
  void track_branches(bool on) { track_branches_ = on; }
  bool tracking_branches() const { return track_branches_; }
  void note_branch(std::uint64_t value) {
    branch_hash_ ^= value + 0x9e3779b97f4a7c15ULL + (branch_hash_ << 6) + (branch_hash_ >> 2);
  }
  std::uint64_t branch_signature() const { return branch_hash_; }

  void corrupt_backward(OpKind kind) { corrupted_ = kind; }
  Scalar fault_scale(OpKind kind) const { return kind == corrupted_ ? Scalar(1.5) : Scalar(1); }

 private:
  struct Entry {
    OpKind kind;
    Tensor<Scalar> output;
    Backward backward;
  };
  std::vector<Entry> entries_;
  bool recording_ = true;
  bool track_branches_ = false;
  std::uint64_t branch_hash_ = 0;
  OpKind corrupted_ = OpKind::kNone;
};

}  // namespace jointnlu
