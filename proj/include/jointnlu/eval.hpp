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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jointnlu/errors.hpp"
#include "jointnlu/tensor.hpp"

namespace jointnlu {

struct ClassScores {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Index support = 0;  // gold count
  Index true_positives = 0;
  Index false_positives = 0;
  Index false_negatives = 0;
};

// Scores of one task. All values are fractions in [0, 1]; reports print them
// as percentages.
struct TaskScores {
  std::string task;
  Index count = 0;
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  // Micro-F1 with one class treated as "no label": its hits are not counted
  // as true positives, only confusions with it count as errors. Slot scoring
  // uses it with "Other" as the headline number.
  std::optional<double> micro_f1_excluding;
  std::string excluded_label;
  std::vector<ClassScores> classes;

  double headline() const { return micro_f1_excluding.value_or(micro_f1); }
};

// Confusion counts of aligned predicted/gold class indices. labels[c] names
// class c. Macro-F1 averages over classes that occur in gold or predictions.
TaskScores f1_scores(std::span<const Index> predicted, std::span<const Index> gold,
                     const std::vector<std::string>& labels, const std::string& task,
                     std::optional<Index> excluded_class = std::nullopt);

// Counts of several evaluation sets pooled into one.
TaskScores merge_scores(const std::vector<TaskScores>& parts);

struct MetricsReport {
  Index utterances = 0;
  Index tokens = 0;
  std::string config_fingerprint;
  std::string corpus_fingerprint;
  std::map<std::string, TaskScores> tasks;

  // Mean over tasks of the headline F1.
  double mean_headline() const;
  nlohmann::ordered_json to_json() const;
  std::string to_text() const;
};

// One evaluated run for the comparison tables.
struct RunResult {
  std::string variant;
  Index train_size = 0;
  std::uint64_t seed = 0;
  std::string corpus_fingerprint;
  std::map<std::string, double> scores;  // task -> headline F1 in [0, 1]
};

nlohmann::ordered_json run_result_to_json(const RunResult& r);
RunResult run_result_from_json(const nlohmann::json& j);

struct Comparison {
  std::string title;
  std::string baseline;
  std::string candidate;
};

struct AblationCell {
  std::string table;
  Index train_size = 0;
  std::string task;
  std::string variant;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one seed
  std::size_t seeds = 0;
  double delta = 0.0;   // this variant minus the other variant of the table
  bool best = false;
};

struct AblationReport {
  std::vector<AblationCell> cells;
  nlohmann::ordered_json to_json() const;
  std::string to_text() const;
};

// Rows are training sizes, columns task F1 per variant, averaged over seeds.
// The larger mean of each (size, task) pair is flagged; ties flag both.
AblationReport ablation_report(const std::vector<RunResult>& runs, const std::vector<Comparison>& tables,
                               const std::vector<std::string>& tasks);

std::string format_percent(double fraction);

}  // namespace jointnlu
