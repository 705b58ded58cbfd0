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

#include "jointnlu/eval.hpp"

#include "jointnlu/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

namespace jointnlu {

namespace {

double ratio(Index num, Index den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

double f1_of(Index tp, Index fp, Index fn) {
  const Index den = 2 * tp + fp + fn;
  return den == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(den);
}

void finish(TaskScores& s, std::optional<Index> excluded) {
  Index tp = 0, fp = 0, fn = 0, correct = 0, ex_tp = 0, ex_fp = 0, ex_fn = 0;
  double macro = 0.0;
  Index macro_classes = 0;
  for (Index c = 0; c < static_cast<Index>(s.classes.size()); ++c) {
    auto& k = s.classes[static_cast<std::size_t>(c)];
    k.precision = ratio(k.true_positives, k.true_positives + k.false_positives);
    k.recall = ratio(k.true_positives, k.true_positives + k.false_negatives);
    k.f1 = f1_of(k.true_positives, k.false_positives, k.false_negatives);
    tp += k.true_positives;
    fp += k.false_positives;
    fn += k.false_negatives;
    correct += k.true_positives;
    if (k.support > 0 || k.false_positives > 0) {
      macro += k.f1;
      ++macro_classes;
    }
    if (excluded && c != *excluded) {
      ex_tp += k.true_positives;
      ex_fp += k.false_positives;
      ex_fn += k.false_negatives;
    }
  }
  s.accuracy = ratio(correct, s.count);
  s.micro_f1 = f1_of(tp, fp, fn);
  s.macro_f1 = macro_classes == 0 ? 0.0 : macro / static_cast<double>(macro_classes);
  if (excluded) s.micro_f1_excluding = f1_of(ex_tp, ex_fp, ex_fn);
}

}  // namespace

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

TaskScores f1_scores(std::span<const Index> predicted, std::span<const Index> gold,
                     const std::vector<std::string>& labels, const std::string& task,
                     std::optional<Index> excluded_class) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("f1_scores(" + task + "): " + std::to_string(predicted.size()) + " predictions for " +
                          std::to_string(gold.size()) + " gold labels");
  }
  const Index classes = static_cast<Index>(labels.size());
  if (excluded_class && (*excluded_class < 0 || *excluded_class >= classes)) {
    throw ValidationError("f1_scores(" + task + "): excluded class out of range");
  }
  TaskScores s;
  s.task = task;
  s.count = static_cast<Index>(gold.size());
  s.classes.resize(labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c) s.classes[c].label = labels[c];
  if (excluded_class) s.excluded_label = labels[static_cast<std::size_t>(*excluded_class)];
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Index g = gold[i], p = predicted[i];
    if (g < 0 || g >= classes || p < 0 || p >= classes) {
      throw ValidationError("f1_scores(" + task + "): class index out of range at example " + std::to_string(i));
    }
    auto& gk = s.classes[static_cast<std::size_t>(g)];
    ++gk.support;
    if (g == p) {
      ++gk.true_positives;
    } else {
      ++gk.false_negatives;
      ++s.classes[static_cast<std::size_t>(p)].false_positives;
    }
  }
  finish(s, excluded_class);
  return s;
}

TaskScores merge_scores(const std::vector<TaskScores>& parts) {
  if (parts.empty()) throw ValidationError("merge_scores: nothing to merge");
  TaskScores s = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.classes.size() != s.classes.size() || p.task != s.task || p.excluded_label != s.excluded_label) {
      throw ValidationError("merge_scores: incompatible task scores");
    }
    s.count += p.count;
    for (std::size_t c = 0; c < s.classes.size(); ++c) {
      if (p.classes[c].label != s.classes[c].label) throw ValidationError("merge_scores: label order differs");
      s.classes[c].support += p.classes[c].support;
      s.classes[c].true_positives += p.classes[c].true_positives;
      s.classes[c].false_positives += p.classes[c].false_positives;
      s.classes[c].false_negatives += p.classes[c].false_negatives;
    }
  }
  std::optional<Index> excluded;
  if (s.micro_f1_excluding) {
    for (std::size_t c = 0; c < s.classes.size(); ++c) {
      if (s.classes[c].label == s.excluded_label) excluded = static_cast<Index>(c);
    }
  }
  finish(s, excluded);
  return s;
}

double MetricsReport::mean_headline() const {
  if (tasks.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [name, s] : tasks) total += s.headline();
  return total / static_cast<double>(tasks.size());
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["utterances"] = utterances;
  j["tokens"] = tokens;
  j["config_fingerprint"] = config_fingerprint;
  j["corpus_fingerprint"] = corpus_fingerprint;
  j["mean_headline_f1"] = mean_headline();
  auto& out = j["tasks"];
  out = nlohmann::ordered_json::object();
  for (const auto& [name, s] : tasks) {
    nlohmann::ordered_json t;
    t["count"] = s.count;
    t["accuracy"] = s.accuracy;
    t["micro_f1"] = s.micro_f1;
    t["macro_f1"] = s.macro_f1;
    if (s.micro_f1_excluding) {
      t["micro_f1_excluding"] = *s.micro_f1_excluding;
      t["excluded_label"] = s.excluded_label;
    }
    auto& classes = t["classes"];
    classes = nlohmann::ordered_json::array();
    for (const auto& k : s.classes) {
      classes.push_back({{"label", k.label},
                         {"precision", k.precision},
                         {"recall", k.recall},
                         {"f1", k.f1},
                         {"support", k.support}});
    }
    out[name] = std::move(t);
  }
  return j;
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << "utterances " << utterances << ", tokens " << tokens << "\n";
  os << std::left << std::setw(8) << "task" << std::right << std::setw(10) << "micro-F1" << std::setw(10) << "macro-F1"
     << std::setw(12) << "micro-F1*" << "\n";
  for (const auto& [name, s] : tasks) {
    os << std::left << std::setw(8) << name << std::right << std::setw(10) << format_percent(s.micro_f1)
       << std::setw(10) << format_percent(s.macro_f1) << std::setw(12)
       << (s.micro_f1_excluding ? format_percent(*s.micro_f1_excluding) : std::string("-")) << "\n";
  }
  for (const auto& [name, s] : tasks) {
    if (s.micro_f1_excluding) os << "* " << name << " micro-F1 without \"" << s.excluded_label << "\"\n";
  }
  for (const auto& [name, s] : tasks) {
    os << "\n" << name << "\n";
    std::size_t width = 5;
    for (const auto& k : s.classes) width = std::max(width, k.label.size());
    for (const auto& k : s.classes) {
      os << "  " << std::left << std::setw(static_cast<int>(width)) << k.label << std::right << std::setw(8)
         << format_percent(k.precision) << std::setw(8) << format_percent(k.recall) << std::setw(8)
         << format_percent(k.f1) << std::setw(8) << k.support << "\n";
    }
  }
  return os.str();
}

AblationReport ablation_report(const std::vector<RunResult>& runs, const std::vector<Comparison>& tables,
                               const std::vector<std::string>& tasks) {
  if (tables.empty()) throw ValidationError("ablation_report: no comparison requested");
  AblationReport report;
  for (const auto& table : tables) {
    if (table.baseline == table.candidate) {
      throw ValidationError("ablation_report: table '" + table.title + "' compares a variant with itself");
    }
    std::set<std::string> fingerprints;
    std::map<Index, std::map<std::string, std::vector<const RunResult*>>> by_size;
    for (const auto& r : runs) {
      if (r.variant != table.baseline && r.variant != table.candidate) continue;
      fingerprints.insert(r.corpus_fingerprint);
      by_size[r.train_size][r.variant].push_back(&r);
    }
    if (fingerprints.size() > 1) {
      throw ValidationError("ablation_report: table '" + table.title + "' mixes runs evaluated on different test sets");
    }
    for (const auto& [size, variants] : by_size) {
      for (const auto& v : {table.baseline, table.candidate}) {
        if (!variants.count(v)) {
          throw ValidationError("ablation_report: table '" + table.title + "' has no '" + v + "' run at size " +
                                std::to_string(size));
        }
      }
      for (const auto& task : tasks) {
        AblationCell cells[2];
        const std::string names[2] = {table.baseline, table.candidate};
        for (int k = 0; k < 2; ++k) {
          const auto& list = variants.at(names[k]);
          std::vector<double> values;
          for (const auto* r : list) {
            auto it = r->scores.find(task);
            if (it == r->scores.end()) {
              throw ValidationError("ablation_report: run '" + names[k] + "' seed " + std::to_string(r->seed) +
                                    " has no " + task + " score");
            }
            values.push_back(it->second);
          }
          double mean = 0.0;
          for (double v : values) mean += v;
          mean /= static_cast<double>(values.size());
          double var = 0.0;
          for (double v : values) var += (v - mean) * (v - mean);
          cells[k] = {table.title, size, task, names[k], mean,
                      values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0,
                      values.size(), 0.0, false};
        }
        cells[0].delta = cells[0].mean - cells[1].mean;
        cells[1].delta = cells[1].mean - cells[0].mean;
        cells[0].best = cells[0].mean >= cells[1].mean;
        cells[1].best = cells[1].mean >= cells[0].mean;
        report.cells.push_back(cells[0]);
        report.cells.push_back(cells[1]);
      }
    }
  }
  return report;
}

nlohmann::ordered_json AblationReport::to_json() const {
  auto out = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    out.push_back({{"table", c.table},
                   {"train_size", c.train_size},
                   {"task", c.task},
                   {"variant", c.variant},
                   {"mean", c.mean},
                   {"stddev", c.stddev},
                   {"seeds", c.seeds},
                   {"delta", c.delta},
                   {"best", c.best}});
  }
  return out;
}

std::string AblationReport::to_text() const {
  // Group cells back into tables: rows are sizes, columns task x variant.
  std::ostringstream os;
  std::vector<std::string> titles;
  for (const auto& c : cells) {
    if (std::find(titles.begin(), titles.end(), c.table) == titles.end()) titles.push_back(c.table);
  }
  for (const auto& title : titles) {
    std::vector<const AblationCell*> mine;
    std::vector<std::string> tasks, variants;
    std::vector<Index> sizes;
    for (const auto& c : cells) {
      if (c.table != title) continue;
      mine.push_back(&c);
      if (std::find(tasks.begin(), tasks.end(), c.task) == tasks.end()) tasks.push_back(c.task);
      if (std::find(variants.begin(), variants.end(), c.variant) == variants.end()) variants.push_back(c.variant);
      if (std::find(sizes.begin(), sizes.end(), c.train_size) == sizes.end()) sizes.push_back(c.train_size);
    }
    const bool spread = std::any_of(mine.begin(), mine.end(), [](const AblationCell* c) { return c->seeds > 1; });
    const int w = spread ? 18 : 11;
    os << title << "\n" << std::left << std::setw(8) << "size";
    for (const auto& t : tasks) {
      for (const auto& v : variants) os << std::right << std::setw(w) << (t + ":" + v).substr(0, static_cast<std::size_t>(w - 1));
    }
    os << "\n";
    for (Index size : sizes) {
      os << std::left << std::setw(8) << size;
      for (const auto& t : tasks) {
        for (const auto& v : variants) {
          for (const auto* c : mine) {
            if (c->train_size != size || c->task != t || c->variant != v) continue;
            std::string cell = format_percent(c->mean);
            if (spread) cell += " +-" + format_percent(c->stddev);
            if (c->best) cell += " *";
            os << std::right << std::setw(w) << cell;
          }
        }
      }
      os << "\n";
    }
    os << "(* best of the pair";
    if (spread) os << "; mean +- std over seeds";
    os << ")\n\n";
  }
  return os.str();
}

nlohmann::ordered_json run_result_to_json(const RunResult& r) {
  return {{"variant", r.variant},
          {"train_size", r.train_size},
          {"seed", r.seed},
          {"corpus_fingerprint", r.corpus_fingerprint},
          {"scores", r.scores}};
}

RunResult run_result_from_json(const nlohmann::json& j) {
  StrictObject o(j, "result");
  RunResult r;
  r.variant = o.require<std::string>("variant");
  r.train_size = o.require<Index>("train_size");
  o.read("seed", r.seed);
  r.corpus_fingerprint = o.require<std::string>("corpus_fingerprint");
  r.scores = o.require<std::map<std::string, double>>("scores");
  o.finish();
  return r;
}

}  // namespace jointnlu
