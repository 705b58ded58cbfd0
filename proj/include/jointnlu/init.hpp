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

#include <cmath>
#include <string>

#include "jointnlu/layers.hpp"
#include "jointnlu/rng.hpp"

namespace jointnlu {

struct Fans {
  Index fan_in;
  Index fan_out;
};

// [out, in] for matrices used as W x; [f, d, l] filter banks count the window
// in both fans; [d, V] embedding tables follow the matrix rule.
inline Fans fans_of(const Shape& shape) {
  if (shape.size() == 2) return {shape[1], shape[0]};
  if (shape.size() == 3) return {shape[1] * shape[2], shape[0] * shape[2]};
  throw ValidationError("xavier_init: expected a 2-D or 3-D weight shape, got " + shape_string(shape));
}

inline double xavier_bound(const Shape& shape) {
  const Fans f = fans_of(shape);
  return std::sqrt(6.0 / static_cast<double>(f.fan_in + f.fan_out));
}

// Uniform on [-a, a] with a = sqrt(6 / (fan_in + fan_out)).
template <typename Scalar>
Tensor<Scalar> xavier_init(const Shape& shape, Rng& rng, bool requires_grad = false) {
  const double a = xavier_bound(shape);
  auto t = Tensor<Scalar>::zeros(shape, requires_grad);
  for (auto& v : t.mutable_data()) v = static_cast<Scalar>(rng.uniform(-a, a));
  return t;
}

template <typename Scalar>
void xavier_fill(Tensor<Scalar>& t, Rng& rng) {
  const double a = xavier_bound(t.shape());
  for (auto& v : t.mutable_data()) v = static_cast<Scalar>(rng.uniform(-a, a));
}

// Each parameter draws from its own stream keyed by (seed, name), so adding or
// removing parameters never shifts another parameter's initial values.
template <typename Scalar>
void initialize_parameter(const Parameter<Scalar>& p, std::uint64_t seed, std::string_view salt = {}) {
  Tensor<Scalar> t = p.tensor;
  if (p.kind == ParamKind::kBias) {
    for (auto& v : t.mutable_data()) v = Scalar(0);
    return;
  }
  Rng rng(derive_seed(seed, std::string(salt) + p.name));
  xavier_fill(t, rng);
}

template <typename Scalar>
void initialize_parameters(const ParameterStore<Scalar>& store, std::uint64_t seed) {
  for (const auto& p : store.all()) initialize_parameter(p, seed);
}

}  // namespace jointnlu
