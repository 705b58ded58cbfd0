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

#include <stdexcept>
#include <string>

namespace jointnlu {

// Bad input, bad config, contract violations. The CLI maps these to exit 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Shape mismatches inside the tensor engine.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Failures while a command is running (divergence, I/O). Exit 2.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace jointnlu
