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
#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "jointnlu/layers.hpp"

namespace jointnlu {

// Raised when a gradient or loss is not finite. Names the parameter if known.
class DivergenceError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamMoments {
  ColVector<Scalar> m;
  ColVector<Scalar> v;
  std::int64_t step = 0;
};

// Bias-corrected Adam with per-parameter moments and step counts, so
// parameters that join training later start their own correction schedule.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  void set_config(const AdamConfig& c) { config_ = c; }

  // Updates every parameter not in `frozen` from its accumulated gradient.
  // Parameters without a gradient count as zero gradient. All gradients are
  // checked before anything is modified.
  void step(const ParameterStore<Scalar>& store, const std::set<std::string>& frozen = {}) {
    for (const auto& p : store.all()) {
      if (frozen.count(p.name) || !p.tensor.has_grad()) continue;
      for (Scalar g : p.tensor.grad()) {
        if (!std::isfinite(static_cast<double>(g))) {
          throw DivergenceError("non-finite gradient in parameter '" + p.name + "'");
        }
      }
    }
    for (const auto& p : store.all()) {
      if (frozen.count(p.name)) continue;
      update(p);
    }
  }

  void update(const Parameter<Scalar>& p) {
    auto& s = moments_[p.name];
    const Index n = p.tensor.size();
    if (s.m.size() != n) {
      s.m = ColVector<Scalar>::Zero(n);
      s.v = ColVector<Scalar>::Zero(n);
    }
    ++s.step;
    const Scalar b1 = static_cast<Scalar>(config_.beta1);
    const Scalar b2 = static_cast<Scalar>(config_.beta2);
    const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(config_.beta1, static_cast<double>(s.step)));
    const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(config_.beta2, static_cast<double>(s.step)));
    const Scalar lr = static_cast<Scalar>(config_.learning_rate);
    const Scalar eps = static_cast<Scalar>(config_.epsilon);
    Tensor<Scalar> t = p.tensor;
    auto w = t.mutable_data();
    if (t.has_grad()) {
      auto g = t.grad();
      for (Index i = 0; i < n; ++i) {
        s.m[i] = b1 * s.m[i] + (Scalar(1) - b1) * g[i];
        s.v[i] = b2 * s.v[i] + (Scalar(1) - b2) * g[i] * g[i];
      }
    } else {
      s.m *= b1;
      s.v *= b2;
    }
    for (Index i = 0; i < n; ++i) {
      const Scalar m_hat = s.m[i] / c1;
      const Scalar v_hat = s.v[i] / c2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }

  // Forgets a parameter's moments and step count.
  void reset(const std::string& name) { moments_.erase(name); }

  const std::map<std::string, AdamMoments<Scalar>>& moments() const { return moments_; }
  std::map<std::string, AdamMoments<Scalar>>& moments() { return moments_; }

 private:
  AdamConfig config_;
  std::map<std::string, AdamMoments<Scalar>> moments_;
};

}  // namespace jointnlu
