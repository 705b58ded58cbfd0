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

#include "jointnlu/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "jointnlu/checkpoint.hpp"
#include "jointnlu/cooccurrence.hpp"
#include "jointnlu/generator.hpp"
#include "jointnlu/json_util.hpp"
#include "jointnlu/run_config.hpp"
#include "jointnlu/verify.hpp"

namespace jointnlu {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

template <typename Scalar>
void predict_stream(const fs::path& checkpoint, std::istream& in, std::ostream& out, std::ostream& err) {
  CheckpointHeader header;
  const auto model = load_model<Scalar>(checkpoint, &header);
  const auto& vocab = header.vocab;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream words(line);
    Utterance u;
    for (std::string w; words >> w;) u.tokens.push_back(w);
    if (u.tokens.empty()) {
      err << "warning: line " << line_no << " is empty, skipped\n";
      continue;
    }
    u.slots.assign(u.tokens.size(), kOtherSlot);
    const auto p = predict_corpus(*model, vocab, {u}, 1).front();
    ordered_json r;
    r["tokens"] = u.tokens;
    if (p.domain) {
      r["domain"] = vocab.domains.label_of(*p.domain);
      r["domain_probability"] = p.domain_probability;
    }
    if (p.intent) {
      r["intent"] = vocab.intents.label_of(*p.intent);
      r["intent_probability"] = p.intent_probability;
    }
    if (!p.slots.empty()) {
      std::vector<std::string> slots;
      for (auto s : p.slots) slots.push_back(vocab.slots.label_of(s));
      r["slots"] = slots;
      r["slot_probabilities"] = p.slot_probabilities;
    }
    out << r.dump() << "\n";
  }
}

std::vector<fs::path> result_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& input : inputs) {
    const fs::path p(input);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().filename() == "result.json") files.push_back(e.path());
      }
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      throw ValidationError("no such result file or directory: " + input);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no result.json files found");
  return files;
}

Comparison parse_comparison(const std::string& text) {
  // "Title=baseline:candidate"
  const auto eq = text.find('=');
  const auto colon = text.rfind(':');
  if (eq == std::string::npos || colon == std::string::npos || colon < eq) {
    throw ValidationError("--compare expects TITLE=BASELINE:CANDIDATE, got '" + text + "'");
  }
  return {text.substr(0, eq), text.substr(eq + 1, colon - eq - 1), text.substr(colon + 1)};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint domain, intent and slot tagger: data generation, training and evaluation"};
  app.name("jointnlu");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path, spec_path, out_path, checkpoint_path, corpus_path, embeddings_path, corrupt;
  std::optional<std::uint64_t> seed;
  bool resume = false;
  std::vector<std::string> result_inputs, comparisons;
  std::vector<std::string> tasks{"domain", "intent", "slot"};

  auto* gen = app.add_subcommand("gen-corpus", "Generate train/dev/test splits from a corpus spec");
  gen->add_option("--spec", spec_path, "Corpus spec (JSON)")->required();
  gen->add_option("--out", out_path, "Output directory")->required();
  gen->add_option("--seed", seed, "Override the spec seed");

  auto* embed = app.add_subcommand("embed-gen", "Build co-occurrence target embeddings for distillation");
  embed->add_option("--spec", spec_path, "Corpus spec (JSON)")->required();
  embed->add_option("--out", out_path, "Embedding text file to write")->required();
  embed->add_option("--config", config_path, "Recipe settings (JSON)");
  embed->add_option("--seed", seed, "Override the recipe seed");

  auto* train = app.add_subcommand("train", "Train a model from a run config");
  train->add_option("--config", config_path, "Run config (JSON)")->required();
  train->add_option("--seed", seed, "Override the run seed");
  train->add_option("--out", out_path, "Override the output directory");
  train->add_flag("--resume", resume, "Continue from <out>/last.ckpt");

  auto* distill = app.add_subcommand("distill", "Fit the character front end to pre-trained word vectors");
  distill->add_option("--config", config_path, "Run config with a 'distill' section")->required();
  distill->add_option("--embeddings", embeddings_path, "Override the embedding file");
  distill->add_option("--seed", seed, "Override the run seed");
  distill->add_option("--out", out_path, "Override the output directory");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a corpus");
  eval->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
  eval->add_option("--corpus", corpus_path, "Corpus file (JSON lines)")->required();
  eval->add_option("--out", out_path, "Also write the report as JSON here");

  auto* predict = app.add_subcommand("predict", "Label whitespace-tokenized lines read from stdin");
  predict->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();

  auto* grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad->add_option("--config", config_path, "Run config whose model section sets the layer sizes");
  grad->add_option("--seed", seed, "Seed for parameters and sampled coordinates");
  grad->add_option("--corrupt-backward", corrupt, "Scale one op's backward pass (self-test)")->group("");

  auto* report = app.add_subcommand("report", "Comparison tables from result.json files");
  report->add_option("--results", result_inputs, "result.json files or directories holding them")->required();
  report->add_option("--compare", comparisons, "TITLE=BASELINE:CANDIDATE variant pair")->required();
  report->add_option("--tasks", tasks, "Task columns");
  report->add_option("--out", out_path, "Directory for report.json and report.txt");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (gen->parsed()) {
      auto spec = load_corpus_spec(spec_path);
      if (seed) spec.seed = *seed;
      const CorpusGenerator generator(spec);
      write_generated_corpus(generator, out_path);
      const auto manifest = read_json_file(fs::path(out_path) / "manifest.json");
      out << "wrote " << out_path << ": " << manifest["sizes"].dump() << ", test filler OOV "
          << format_percent(manifest["test_oov"]["filler_oov_rate"].get<double>()) << "%\n";
    } else if (embed->parsed()) {
      const CorpusGenerator generator(load_corpus_spec(spec_path));
      CooccurrenceOptions options;
      if (!config_path.empty()) options = cooccurrence_options_from_json(read_json_file(config_path));
      if (seed) options.seed = *seed;
      const auto table = cooccurrence_embeddings(generator, options);
      write_embeddings(out_path, table);
      out << "wrote " << table.size() << " vectors of dimension " << table.dim() << " to " << out_path << "\n";
    } else if (train->parsed()) {
      auto config = load_run_config(config_path);
      if (seed) config.set_seed(*seed);
      if (!out_path.empty()) config.out_dir = out_path;
      TrainRunOptions options;
      options.resume = resume;
      options.progress = &out;
      const auto outcome = run_training(config, options);
      out << "checkpoint " << outcome.checkpoint.string() << "\n";
      if (outcome.test) out << outcome.test->to_text();
    } else if (distill->parsed()) {
      auto config = load_run_config(config_path);
      if (seed) config.set_seed(*seed);
      if (!out_path.empty()) config.out_dir = out_path;
      if (!embeddings_path.empty()) {
        if (!config.distill) config.distill = DistillSettings{};
        config.distill->embeddings = embeddings_path;
      }
      const auto outcome = run_distillation(config, &out);
      out << "checkpoint " << outcome.checkpoint.string() << "\n";
    } else if (eval->parsed()) {
      const auto r = evaluate_checkpoint(checkpoint_path, corpus_path);
      out << r.to_text();
      if (!out_path.empty()) write_file(out_path, r.to_json().dump(2) + "\n");
    } else if (predict->parsed()) {
      const auto header = read_checkpoint_header(checkpoint_path);
      if (header.config.precision == Precision::kFloat) {
        predict_stream<float>(checkpoint_path, in, out, err);
      } else {
        predict_stream<double>(checkpoint_path, in, out, err);
      }
    } else if (grad->parsed()) {
      ModelConfig shape;
      if (!config_path.empty()) shape = load_run_config(config_path).model;
      GradientSuiteOptions options;
      if (seed) options.seed = *seed;
      if (!corrupt.empty()) options.corrupt_backward = op_kind_from_name(corrupt);
      constexpr double kTolerance = 1e-4;
      bool ok = true;
      for (const auto& e : run_gradient_suite(shape, options)) {
        const bool pass = e.result.passed(kTolerance);
        ok = ok && pass;
        out << (pass ? "PASS " : "FAIL ") << std::left << std::setw(28) << e.name << " max rel err "
            << std::scientific << std::setprecision(3) << e.result.max_relative_error << std::defaultfloat
            << "  (" << e.result.coordinates << " coordinates";
        if (!pass) out << ", worst " << e.result.worst_tensor << "[" << e.result.worst_index << "]";
        out << ")\n";
      }
      if (!ok) {
        err << "gradient check failed\n";
        return kExitRuntime;
      }
    } else if (report->parsed()) {
      std::vector<RunResult> runs;
      for (const auto& f : result_files(result_inputs)) runs.push_back(run_result_from_json(read_json_file(f)));
      std::vector<Comparison> tables;
      for (const auto& c : comparisons) tables.push_back(parse_comparison(c));
      const auto r = ablation_report(runs, tables, tasks);
      out << r.to_text();
      if (!out_path.empty()) {
        write_file(fs::path(out_path) / "report.json", r.to_json().dump(2) + "\n");
        write_file(fs::path(out_path) / "report.txt", r.to_text());
      }
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace jointnlu
