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

#include <iostream>
#include <string>
#include <vector>

namespace jointnlu {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Entry point of the command-line tool; args excludes the program name.
// Validation errors exit with 1, runtime failures with 2.
int run_cli(const std::vector<std::string>& args, std::istream& in = std::cin, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace jointnlu
