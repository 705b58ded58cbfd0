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

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "jointnlu/errors.hpp"

namespace jointnlu {

// Reads an object field by field and rejects keys nobody asked for.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  bool read(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return false;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where_ + "." + key + ": " + e.what());
    }
    return true;
  }

  template <typename T>
  T require(const std::string& key) {
    T out{};
    if (!read(key, out)) throw ValidationError(where_ + ": missing key '" + key + "'");
    return out;
  }

  const nlohmann::json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError(where_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace jointnlu
