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

#include "jointnlu/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "jointnlu/rng.hpp"

namespace jointnlu {

namespace {

struct Probe {
  double loss;
  std::uint64_t signature;
};

Probe evaluate(const ScalarFunction& f, const GradientCheckOptions& options) {
  Tape<double> tape;
  tape.track_branches(true);
  tape.corrupt_backward(options.corrupt_backward);
  const Tensor<double> loss = f(tape);
  return {loss.item(), tape.branch_signature()};
}

}  // namespace

GradientCheckResult gradient_check(const ScalarFunction& f, const std::vector<NamedTensor>& params,
                                   const GradientCheckOptions& options) {
  GradientCheckResult result;
  for (const auto& p : params) p.tensor.zero_grad();

  std::uint64_t base_signature = 0;
  {
    Tape<double> tape;
    tape.track_branches(true);
    tape.corrupt_backward(options.corrupt_backward);
    const Tensor<double> loss = f(tape);
    if (loss.size() != 1) throw ShapeError("gradient_check: function must return a scalar");
    tape.backward(loss);
    base_signature = tape.branch_signature();
  }

  Rng rng(options.seed);
  for (const auto& p : params) {
    Tensor<double> tensor = p.tensor;
    const Index n = tensor.size();
    std::vector<double> analytic(static_cast<std::size_t>(n), 0.0);
    if (tensor.has_grad()) std::copy(tensor.grad().begin(), tensor.grad().end(), analytic.begin());

    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);

    Index checked = 0;
    for (Index idx : order) {
      if (checked >= options.samples_per_tensor) break;
      auto values = tensor.mutable_data();
      const double original = values[static_cast<std::size_t>(idx)];
      values[static_cast<std::size_t>(idx)] = original + options.epsilon;
      const Probe plus = evaluate(f, options);
      values[static_cast<std::size_t>(idx)] = original - options.epsilon;
      const Probe minus = evaluate(f, options);
      values[static_cast<std::size_t>(idx)] = original;

      if (options.skip_kinks && (plus.signature != base_signature || minus.signature != base_signature)) {
        ++result.kinks_skipped;
        continue;
      }
      ++checked;
      ++result.coordinates;
      const double g_ad = analytic[static_cast<std::size_t>(idx)];
      const double g_fd = (plus.loss - minus.loss) / (2.0 * options.epsilon);
      double err;
      if (!std::isfinite(g_ad) || !std::isfinite(g_fd)) {
        result.saw_nan = true;
        err = std::numeric_limits<double>::infinity();
      } else {
        err = std::abs(g_ad - g_fd) / std::max({std::abs(g_ad), std::abs(g_fd), options.magnitude_floor});
      }
      if (err > result.max_relative_error || result.worst_index < 0) {
        if (err >= result.max_relative_error) {
          result.max_relative_error = err;
          result.worst_tensor = p.name;
          result.worst_index = idx;
          result.worst_analytic = g_ad;
          result.worst_numeric = g_fd;
        }
      }
    }
  }
  return result;
}

}  // namespace jointnlu
