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

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "jointnlu/tensor.hpp"

namespace jointnlu {

struct NamedTensor {
  std::string name;
  Tensor<double> tensor;
};

struct GradientCheckOptions {
  double epsilon = 1e-5;
  // Coordinates sampled per tensor; tensors at most this large are checked exhaustively.
  Index samples_per_tensor = 12;
  std::uint64_t seed = 0x5eed;
  // Resample a coordinate when either finite-difference probe changes a ReLU
  // sign or a max-pool winner relative to the base point.
  bool skip_kinks = true;
  OpKind corrupt_backward = OpKind::kNone;
  // Denominator floor of the relative error. Central differences at
  // epsilon = 1e-5 carry roundoff near 1e-11, so gradients much smaller than
  // this floor cannot be resolved relative to themselves.
  double magnitude_floor = 1e-6;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  std::size_t kinks_skipped = 0;
  bool saw_nan = false;

  bool passed(double tolerance) const { return !saw_nan && max_relative_error < tolerance; }
};

using ScalarFunction = std::function<Tensor<double>(Tape<double>&)>;

// Compares reverse-mode gradients of f against central differences on sampled
// coordinates of each tensor. Error per coordinate is
// |g_ad - g_fd| / max(|g_ad|, |g_fd|, magnitude_floor). f must be deterministic.
GradientCheckResult gradient_check(const ScalarFunction& f, const std::vector<NamedTensor>& params,
                                   const GradientCheckOptions& options = {});

}  // namespace jointnlu
