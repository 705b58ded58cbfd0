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

#include <string>
#include <vector>

#include "jointnlu/gradcheck.hpp"
#include "jointnlu/model.hpp"

namespace jointnlu {

struct GradientSuiteEntry {
  std::string name;
  GradientCheckResult result;
};

struct GradientSuiteOptions {
  std::uint64_t seed = 1;
  Index samples_per_tensor = 12;
  OpKind corrupt_backward = OpKind::kNone;  // fault injection for self-tests
};

// Checks every layer built from `shape` (character, context and head sizes)
// and the full model in the four representation/link variants on a
// two-utterance batch, in double precision.
std::vector<GradientSuiteEntry> run_gradient_suite(const ModelConfig& shape, const GradientSuiteOptions& options);

}  // namespace jointnlu
