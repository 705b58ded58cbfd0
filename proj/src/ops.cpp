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

#include "jointnlu/ops.hpp"

#include <cmath>
#include <sstream>

namespace jointnlu {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

OpKind op_kind_from_name(const std::string& name) {
  static const std::pair<const char*, OpKind> kTable[] = {
      {"matmul", OpKind::kMatmul},       {"add_bias", OpKind::kAddBias},
      {"conv1d", OpKind::kConv1d},       {"max_over_time", OpKind::kMaxOverTime},
      {"relu", OpKind::kRelu},           {"sigmoid", OpKind::kSigmoid},
      {"add", OpKind::kAdd},             {"sub", OpKind::kSub},
      {"mul", OpKind::kMul},             {"mask_columns", OpKind::kMaskColumns},
      {"gather_columns", OpKind::kGatherColumns}, {"concat_rows", OpKind::kConcatRows},
      {"softmax_cross_entropy", OpKind::kSoftmaxCrossEntropy},
      {"squared_error", OpKind::kSquaredError},   {"sum", OpKind::kSum},
  };
  for (const auto& [key, kind] : kTable) {
    if (name == key) return kind;
  }
  throw ValidationError("unknown op name '" + name + "'");
}

namespace {

template <typename Scalar>
bool any_requires_grad(std::initializer_list<const Tensor<Scalar>*> inputs) {
  for (const auto* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

template <typename Scalar>
void require_same_shape(const char* op, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename Scalar>
Index matrix_rank_check(const char* op, const Tensor<Scalar>& t) {
  if (t.rank() > 2) {
    throw ShapeError(std::string(op) + ": expected a vector or matrix, got " + shape_string(t.shape()));
  }
  return t.rank();
}

// im2col for conv1d: row c*l + k, column t holds input(c, t + k - padding).
template <typename Scalar>
RowMatrix<Scalar> unfold(const typename Tensor<Scalar>::ConstMatrixMap& in, Index width, Index padding,
                         Index out_len) {
  const Index d = in.rows();
  const Index n = in.cols();
  RowMatrix<Scalar> cols = RowMatrix<Scalar>::Zero(d * width, out_len);
  for (Index c = 0; c < d; ++c) {
    for (Index k = 0; k < width; ++k) {
      const Index shift = k - padding;
      const Index t0 = std::max<Index>(0, -shift);
      const Index t1 = std::min<Index>(out_len, n - shift);
      if (t1 > t0) cols.row(c * width + k).segment(t0, t1 - t0) = in.row(c).segment(t0 + shift, t1 - t0);
    }
  }
  return cols;
}

template <typename Scalar>
void fold_add(const RowMatrix<Scalar>& dcols, Index width, Index padding,
              typename Tensor<Scalar>::MatrixMap& din) {
  const Index d = din.rows();
  const Index n = din.cols();
  const Index out_len = dcols.cols();
  for (Index c = 0; c < d; ++c) {
    for (Index k = 0; k < width; ++k) {
      const Index shift = k - padding;
      const Index t0 = std::max<Index>(0, -shift);
      const Index t1 = std::min<Index>(out_len, n - shift);
      if (t1 > t0) din.row(c).segment(t0 + shift, t1 - t0) += dcols.row(c * width + k).segment(t0, t1 - t0);
    }
  }
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> matmul(Tape<Scalar>& tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  matrix_rank_check("matmul", a);
  const Index b_rank = matrix_rank_check("matmul", b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner extents differ, " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  Shape out_shape = b_rank == 1 ? Shape{a.rows()} : Shape{a.rows(), b.cols()};
  auto out = Tensor<Scalar>::zeros(out_shape, any_requires_grad({&a, &b}));
  out.mutable_matrix().noalias() = a.matrix() * b.matrix();
  tape.record(OpKind::kMatmul, out, [a, b, out, &tape] {
    const auto g = out.grad_matrix();
    const Scalar s = tape.fault_scale(OpKind::kMatmul);
    if (a.requires_grad()) a.grad_accumulator().noalias() += s * (g * b.matrix().transpose());
    if (b.requires_grad()) b.grad_accumulator().noalias() += s * (a.matrix().transpose() * g);
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> add_bias(Tape<Scalar>& tape, const Tensor<Scalar>& x, const Tensor<Scalar>& bias) {
  matrix_rank_check("add_bias", x);
  if (bias.rank() != 1 || bias.size() != x.rows()) {
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " does not match rows of " +
                     shape_string(x.shape()));
  }
  auto out = Tensor<Scalar>::zeros(x.shape(), any_requires_grad({&x, &bias}));
  out.mutable_matrix() = x.matrix().colwise() + bias.matrix().col(0);
  tape.record(OpKind::kAddBias, out, [x, bias, out, &tape] {
    const auto g = out.grad_matrix();
    const Scalar s = tape.fault_scale(OpKind::kAddBias);
    if (x.requires_grad()) x.grad_accumulator() += s * g;
    if (bias.requires_grad()) bias.grad_accumulator().col(0) += s * g.rowwise().sum();
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> conv1d(Tape<Scalar>& tape, const Tensor<Scalar>& input, const Tensor<Scalar>& filters,
                      const Tensor<Scalar>& bias, Index padding) {
  if (input.rank() != 2) throw ShapeError("conv1d: input must be [d, n], got " + shape_string(input.shape()));
  if (filters.rank() != 3) throw ShapeError("conv1d: filters must be [f, d, l], got " + shape_string(filters.shape()));
  const Index d = input.rows();
  const Index n = input.cols();
  const Index f = filters.shape()[0];
  const Index width = filters.shape()[2];
  if (filters.shape()[1] != d) {
    throw ShapeError("conv1d: filter depth " + shape_string(filters.shape()) + " does not match input " +
                     shape_string(input.shape()));
  }
  if (bias.rank() != 1 || bias.size() != f) {
    throw ShapeError("conv1d: bias " + shape_string(bias.shape()) + " does not match " + std::to_string(f) +
                     " filters");
  }
  if (padding < 0) throw ShapeError("conv1d: negative padding");
  if (n + 2 * padding < width) {
    throw ShapeError("conv1d: window width " + std::to_string(width) + " exceeds padded input length " +
                     std::to_string(n + 2 * padding));
  }
  const Index out_len = n + 2 * padding - width + 1;
  auto cols = std::make_shared<RowMatrix<Scalar>>(unfold<Scalar>(input.matrix(), width, padding, out_len));
  auto out = Tensor<Scalar>::zeros({f, out_len}, any_requires_grad({&input, &filters, &bias}));
  out.mutable_matrix().noalias() = filters.matrix() * (*cols);
  out.mutable_matrix().colwise() += bias.matrix().col(0);
  tape.record(OpKind::kConv1d, out, [input, filters, bias, out, cols, width, padding, &tape] {
    const auto g = out.grad_matrix();
    const Scalar s = tape.fault_scale(OpKind::kConv1d);
    if (filters.requires_grad()) filters.grad_accumulator().noalias() += s * (g * cols->transpose());
    if (bias.requires_grad()) bias.grad_accumulator().col(0) += s * g.rowwise().sum();
    if (input.requires_grad()) {
      RowMatrix<Scalar> dcols = s * (filters.matrix().transpose() * g);
      auto din = input.grad_accumulator();
      fold_add<Scalar>(dcols, width, padding, din);
    }
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> max_over_groups(Tape<Scalar>& tape, const Tensor<Scalar>& input,
                               const std::vector<std::vector<Index>>& groups) {
  matrix_rank_check("max_over_time", input);
  const Index f = input.rows();
  const Index n = input.cols();
  const Index num_groups = static_cast<Index>(groups.size());
  if (num_groups == 0) throw ShapeError("max_over_time: no groups");
  auto out = Tensor<Scalar>::zeros({f, num_groups}, input.requires_grad());
  auto winners = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(f * num_groups));
  const auto in = input.matrix();
  auto o = out.mutable_matrix();
  for (Index g = 0; g < num_groups; ++g) {
    const auto& members = groups[g];
    if (members.empty()) throw ValidationError("max_over_time: input is fully masked");
    for (Index col : members) {
      if (col < 0 || col >= n) throw ShapeError("max_over_time: column " + std::to_string(col) + " out of range");
    }
    for (Index r = 0; r < f; ++r) {
      Index best = members.front();
      Scalar best_value = in(r, best);
      for (std::size_t m = 1; m < members.size(); ++m) {
        const Scalar v = in(r, members[m]);
        if (v > best_value) {
          best_value = v;
          best = members[m];
        }
      }
      o(r, g) = best_value;
      (*winners)[static_cast<std::size_t>(r * num_groups + g)] = best;
    }
  }
  if (tape.tracking_branches()) {
    std::uint64_t h = 0;
    for (Index w : *winners) h = h * 1315423911ULL + static_cast<std::uint64_t>(w);
    tape.note_branch(h);
  }
  tape.record(OpKind::kMaxOverTime, out, [input, out, winners, num_groups, &tape] {
    const auto g = out.grad_matrix();
    auto din = input.grad_accumulator();
    const Scalar s = tape.fault_scale(OpKind::kMaxOverTime);
    for (Index r = 0; r < g.rows(); ++r) {
      for (Index c = 0; c < num_groups; ++c) din(r, (*winners)[static_cast<std::size_t>(r * num_groups + c)]) += s * g(r, c);
    }
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> max_over_time(Tape<Scalar>& tape, const Tensor<Scalar>& input, std::span<const std::uint8_t> mask) {
  matrix_rank_check("max_over_time", input);
  const Index n = input.cols();
  if (!mask.empty() && static_cast<Index>(mask.size()) != n) {
    throw ShapeError("max_over_time: mask length " + std::to_string(mask.size()) + " for input " +
                     shape_string(input.shape()));
  }
  std::vector<std::vector<Index>> groups(1);
  for (Index t = 0; t < n; ++t) {
    if (mask.empty() || mask[static_cast<std::size_t>(t)]) groups[0].push_back(t);
  }
  auto pooled = max_over_groups(tape, input, groups);
  // [f, 1] and [f] share storage layout; return the vector form.
  auto out = Tensor<Scalar>::zeros({input.rows()}, pooled.requires_grad());
  out.mutable_matrix() = pooled.matrix();
  tape.record(OpKind::kMaxOverTime, out, [pooled, out] { pooled.grad_accumulator() += out.grad_matrix(); });
  return out;
}

template <typename Scalar>
Tensor<Scalar> relu(Tape<Scalar>& tape, const Tensor<Scalar>& x) {
  auto out = Tensor<Scalar>::zeros(x.shape(), x.requires_grad());
  out.mutable_matrix() = x.matrix().cwiseMax(Scalar(0));
  if (tape.tracking_branches()) {
    std::uint64_t h = 0;
    for (Scalar v : x.data()) h = h * 31 + (v > Scalar(0) ? 1 : 0);
    tape.note_branch(h);
  }
  tape.record(OpKind::kRelu, out, [x, out, &tape] {
    const Scalar s = tape.fault_scale(OpKind::kRelu);
    x.grad_accumulator().array() +=
        s * (x.matrix().array() > Scalar(0)).template cast<Scalar>() * out.grad_matrix().array();
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> sigmoid(Tape<Scalar>& tape, const Tensor<Scalar>& x) {
  auto out = Tensor<Scalar>::zeros(x.shape(), x.requires_grad());
  out.mutable_matrix() = (Scalar(1) / (Scalar(1) + (-x.matrix().array()).exp())).matrix();
  tape.record(OpKind::kSigmoid, out, [x, out, &tape] {
    const Scalar s = tape.fault_scale(OpKind::kSigmoid);
    const auto y = out.matrix().array();
    x.grad_accumulator().array() += s * out.grad_matrix().array() * y * (Scalar(1) - y);
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> add(Tape<Scalar>& tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape("add", a, b);
  auto out = Tensor<Scalar>::zeros(a.shape(), any_requires_grad({&a, &b}));
  out.mutable_matrix() = a.matrix() + b.matrix();
  tape.record(OpKind::kAdd, out, [a, b, out, &tape] {
    const Scalar s = tape.fault_scale(OpKind::kAdd);
    if (a.requires_grad()) a.grad_accumulator() += s * out.grad_matrix();
    if (b.requires_grad()) b.grad_accumulator() += s * out.grad_matrix();
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> sub(Tape<Scalar>& tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape("sub", a, b);
  auto out = Tensor<Scalar>::zeros(a.shape(), any_requires_grad({&a, &b}));
  out.mutable_matrix() = a.matrix() - b.matrix();
  tape.record(OpKind::kSub, out, [a, b, out, &tape] {
    const Scalar s = tape.fault_scale(OpKind::kSub);
    if (a.requires_grad()) a.grad_accumulator() += s * out.grad_matrix();
    if (b.requires_grad()) b.grad_accumulator() -= s * out.grad_matrix();
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> mul(Tape<Scalar>& tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape("mul", a, b);
  auto out = Tensor<Scalar>::zeros(a.shape(), any_requires_grad({&a, &b}));
  out.mutable_matrix() = a.matrix().cwiseProduct(b.matrix());
  tape.record(OpKind::kMul, out, [a, b, out, &tape] {
    const Scalar s = tape.fault_scale(OpKind::kMul);
    if (a.requires_grad()) a.grad_accumulator() += s * out.grad_matrix().cwiseProduct(b.matrix());
    if (b.requires_grad()) b.grad_accumulator() += s * out.grad_matrix().cwiseProduct(a.matrix());
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> mask_columns(Tape<Scalar>& tape, const Tensor<Scalar>& x, std::span<const std::uint8_t> mask) {
  matrix_rank_check("mask_columns", x);
  if (static_cast<Index>(mask.size()) != x.cols()) {
    throw ShapeError("mask_columns: mask length " + std::to_string(mask.size()) + " for " + shape_string(x.shape()));
  }
  Eigen::Array<Scalar, 1, Eigen::Dynamic> keep(x.cols());
  for (Index t = 0; t < x.cols(); ++t) keep[t] = mask[static_cast<std::size_t>(t)] ? Scalar(1) : Scalar(0);
  auto out = Tensor<Scalar>::zeros(x.shape(), x.requires_grad());
  out.mutable_matrix() = (x.matrix().array().rowwise() * keep).matrix();
  tape.record(OpKind::kMaskColumns, out, [x, out, keep, &tape] {
    const Scalar s = tape.fault_scale(OpKind::kMaskColumns);
    x.grad_accumulator().array() += s * (out.grad_matrix().array().rowwise() * keep);
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> gather_columns(Tape<Scalar>& tape, const Tensor<Scalar>& x, std::span<const Index> indices) {
  matrix_rank_check("gather_columns", x);
  if (indices.empty()) throw ShapeError("gather_columns: no indices");
  const Index m = x.rows();
  const Index v = x.cols();
  for (Index idx : indices) {
    if (idx < -1 || idx >= v) {
      throw ShapeError("gather_columns: index " + std::to_string(idx) + " out of range for " + shape_string(x.shape()));
    }
  }
  const Index len = static_cast<Index>(indices.size());
  auto out = Tensor<Scalar>::zeros({m, len}, x.requires_grad());
  auto o = out.mutable_matrix();
  const auto in = x.matrix();
  for (Index j = 0; j < len; ++j) {
    const Index idx = indices[static_cast<std::size_t>(j)];
    if (idx >= 0) o.col(j) = in.col(idx);
  }
  auto kept = std::make_shared<std::vector<Index>>(indices.begin(), indices.end());
  tape.record(OpKind::kGatherColumns, out, [x, out, kept, &tape] {
    const Scalar s = tape.fault_scale(OpKind::kGatherColumns);
    const auto g = out.grad_matrix();
    auto dx = x.grad_accumulator();
    for (std::size_t j = 0; j < kept->size(); ++j) {
      const Index idx = (*kept)[j];
      if (idx >= 0) dx.col(idx) += s * g.col(static_cast<Index>(j));
    }
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> embedding_lookup(Tape<Scalar>& tape, const Tensor<Scalar>& table, std::span<const Index> indices) {
  if (table.rank() != 2) throw ShapeError("embedding_lookup: table must be [d, V], got " + shape_string(table.shape()));
  for (Index idx : indices) {
    if (idx < 0 || idx >= table.cols()) {
      throw ValidationError("embedding_lookup: index " + std::to_string(idx) + " outside vocabulary of size " +
                            std::to_string(table.cols()));
    }
  }
  return gather_columns(tape, table, indices);
}

template <typename Scalar>
Tensor<Scalar> concat_rows(Tape<Scalar>& tape, const std::vector<Tensor<Scalar>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const Index n = parts.front().cols();
  Index rows = 0;
  bool needs_grad = false;
  for (const auto& p : parts) {
    matrix_rank_check("concat_rows", p);
    if (p.cols() != n) {
      throw ShapeError("concat_rows: column count mismatch " + shape_string(parts.front().shape()) + " vs " +
                       shape_string(p.shape()));
    }
    rows += p.rows();
    needs_grad = needs_grad || p.requires_grad();
  }
  auto out = Tensor<Scalar>::zeros({rows, n}, needs_grad);
  Index offset = 0;
  for (const auto& p : parts) {
    out.mutable_matrix().middleRows(offset, p.rows()) = p.matrix();
    offset += p.rows();
  }
  tape.record(OpKind::kConcatRows, out, [parts, out, &tape] {
    const Scalar s = tape.fault_scale(OpKind::kConcatRows);
    const auto g = out.grad_matrix();
    Index off = 0;
    for (const auto& p : parts) {
      if (p.requires_grad()) p.grad_accumulator() += s * g.middleRows(off, p.rows());
      off += p.rows();
    }
  });
  return out;
}

template <typename Scalar>
RowMatrix<Scalar> softmax_columns(const Eigen::Ref<const RowMatrix<Scalar>>& logits) {
  RowMatrix<Scalar> p = logits.rowwise() - logits.colwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

template <typename Scalar>
SoftmaxLoss<Scalar> softmax_cross_entropy(Tape<Scalar>& tape, const Tensor<Scalar>& logits,
                                          std::span<const Index> targets, std::span<const Scalar> weights) {
  matrix_rank_check("softmax_cross_entropy", logits);
  const Index c = logits.rows();
  const Index n = logits.cols();
  if (static_cast<Index>(targets.size()) != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                     shape_string(logits.shape()));
  }
  if (!weights.empty() && static_cast<Index>(weights.size()) != n) {
    throw ShapeError("softmax_cross_entropy: weight count does not match columns");
  }
  for (Index t : targets) {
    if (t < 0 || t >= c) {
      throw ValidationError("softmax_cross_entropy: target " + std::to_string(t) + " outside [0, " +
                            std::to_string(c) + ")");
    }
  }
  SoftmaxLoss<Scalar> result;
  const auto z = logits.matrix();
  const RowMatrix<Scalar> shifted = z.rowwise() - z.colwise().maxCoeff();
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> log_norm = shifted.array().exp().colwise().sum().log();
  result.probabilities = (shifted.array().rowwise() - log_norm).exp().matrix();
  Scalar total = 0;
  for (Index j = 0; j < n; ++j) {
    const Scalar w = weights.empty() ? Scalar(1) : weights[static_cast<std::size_t>(j)];
    total += w * (log_norm[j] - shifted(targets[static_cast<std::size_t>(j)], j));
  }
  result.loss = Tensor<Scalar>::zeros({1}, logits.requires_grad());
  result.loss.mutable_data()[0] = total;
  auto probs = std::make_shared<RowMatrix<Scalar>>(result.probabilities);
  auto tgt = std::make_shared<std::vector<Index>>(targets.begin(), targets.end());
  auto wts = std::make_shared<std::vector<Scalar>>(weights.begin(), weights.end());
  tape.record(OpKind::kSoftmaxCrossEntropy, result.loss, [logits, loss = result.loss, probs, tgt, wts, &tape] {
    const Scalar upstream = loss.grad_matrix()(0, 0) * tape.fault_scale(OpKind::kSoftmaxCrossEntropy);
    auto dz = logits.grad_accumulator();
    for (Index j = 0; j < probs->cols(); ++j) {
      const Scalar w = wts->empty() ? Scalar(1) : (*wts)[static_cast<std::size_t>(j)];
      dz.col(j) += (upstream * w) * probs->col(j);
      dz((*tgt)[static_cast<std::size_t>(j)], j) -= upstream * w;
    }
  });
  return result;
}

template <typename Scalar>
Tensor<Scalar> squared_error(Tape<Scalar>& tape, const Tensor<Scalar>& pred, const RowMatrix<Scalar>& target) {
  matrix_rank_check("squared_error", pred);
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("squared_error: prediction " + shape_string(pred.shape()) + " vs target [" +
                     std::to_string(target.rows()) + ", " + std::to_string(target.cols()) + "]");
  }
  auto diff = std::make_shared<RowMatrix<Scalar>>(pred.matrix() - target);
  const Scalar scale = Scalar(1) / static_cast<Scalar>(pred.cols());
  auto out = Tensor<Scalar>::zeros({1}, pred.requires_grad());
  out.mutable_data()[0] = diff->squaredNorm() * scale;
  tape.record(OpKind::kSquaredError, out, [pred, out, diff, scale, &tape] {
    const Scalar g = out.grad_matrix()(0, 0) * tape.fault_scale(OpKind::kSquaredError);
    pred.grad_accumulator() += (Scalar(2) * scale * g) * (*diff);
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar> sum(Tape<Scalar>& tape, const Tensor<Scalar>& x) {
  auto out = Tensor<Scalar>::zeros({1}, x.requires_grad());
  out.mutable_data()[0] = x.matrix().sum();
  tape.record(OpKind::kSum, out, [x, out, &tape] {
    x.grad_accumulator().array() += out.grad_matrix()(0, 0) * tape.fault_scale(OpKind::kSum);
  });
  return out;
}

#define JOINTNLU_INSTANTIATE_OPS(S)                                                                          \
  template Tensor<S> matmul(Tape<S>&, const Tensor<S>&, const Tensor<S>&);                                  \
  template Tensor<S> add_bias(Tape<S>&, const Tensor<S>&, const Tensor<S>&);                                \
  template Tensor<S> conv1d(Tape<S>&, const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, Index);         \
  template Tensor<S> max_over_time(Tape<S>&, const Tensor<S>&, std::span<const std::uint8_t>);              \
  template Tensor<S> max_over_groups(Tape<S>&, const Tensor<S>&, const std::vector<std::vector<Index>>&);   \
  template Tensor<S> relu(Tape<S>&, const Tensor<S>&);                                                      \
  template Tensor<S> sigmoid(Tape<S>&, const Tensor<S>&);                                                   \
  template Tensor<S> add(Tape<S>&, const Tensor<S>&, const Tensor<S>&);                                     \
  template Tensor<S> sub(Tape<S>&, const Tensor<S>&, const Tensor<S>&);                                     \
  template Tensor<S> mul(Tape<S>&, const Tensor<S>&, const Tensor<S>&);                                     \
  template Tensor<S> mask_columns(Tape<S>&, const Tensor<S>&, std::span<const std::uint8_t>);               \
  template Tensor<S> gather_columns(Tape<S>&, const Tensor<S>&, std::span<const Index>);                     \
  template Tensor<S> embedding_lookup(Tape<S>&, const Tensor<S>&, std::span<const Index>);                  \
  template Tensor<S> concat_rows(Tape<S>&, const std::vector<Tensor<S>>&);                                  \
  template SoftmaxLoss<S> softmax_cross_entropy(Tape<S>&, const Tensor<S>&, std::span<const Index>,         \
                                                std::span<const S>);                                        \
  template Tensor<S> squared_error(Tape<S>&, const Tensor<S>&, const RowMatrix<S>&);                        \
  template Tensor<S> sum(Tape<S>&, const Tensor<S>&);                                                       \
  template RowMatrix<S> softmax_columns<S>(const Eigen::Ref<const RowMatrix<S>>&);

JOINTNLU_INSTANTIATE_OPS(float)
JOINTNLU_INSTANTIATE_OPS(double)

#undef JOINTNLU_INSTANTIATE_OPS

}  // namespace jointnlu
