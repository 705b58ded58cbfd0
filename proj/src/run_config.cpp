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

#include "jointnlu/run_config.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <numeric>

#include "jointnlu/checkpoint.hpp"
#include "jointnlu/json_util.hpp"
#include "jointnlu/rng.hpp"

namespace jointnlu {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

AdamConfig read_adam(const json& j, const std::string& where, AdamConfig c) {
  StrictObject o(j, where);
  o.read("learning_rate", c.learning_rate);
  o.read("beta1", c.beta1);
  o.read("beta2", c.beta2);
  o.read("epsilon", c.epsilon);
  o.finish();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + tmp.string());
    out << text;
    if (!out) throw RuntimeFailure("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  schedule.seed = s;
}

std::string RunConfig::variant_label() const {
  if (!variant.empty()) return variant;
  std::string label = model.representation == Representation::kCharacters ? "char" : "word";
  if (model.tasks.all()) {
    label += "-multi";
  } else {
    for (const auto& [on, name] : {std::pair{model.tasks.domain, "domain"}, std::pair{model.tasks.intent, "intent"},
                                   std::pair{model.tasks.slot, "slot"}}) {
      if (on) label += std::string("-") + name;
    }
  }
  if (model.links) label += "-links";
  if (init_checkpoint) label += "-distilled";
  return label;
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  if (!variant.empty()) j["variant"] = variant;
  j["seed"] = seed;
  j["out_dir"] = out_dir.string();
  j["model"] = model_config_to_json(model, false);
  j["schedule"] = {{"phase1_epochs", schedule.phase1_epochs},
                   {"phase2_epochs", schedule.phase2_epochs},
                   {"batch_size", schedule.batch_size},
                   {"patience", schedule.patience},
                   {"adam", adam_config_to_json(schedule.adam)}};
  ordered_json paths{{"train", data.train.string()}};
  if (!data.valid.empty()) paths["valid"] = data.valid.string();
  if (!data.test.empty()) paths["test"] = data.test.string();
  if (data.train_size) paths["train_size"] = *data.train_size;
  j["data"] = paths;
  if (init_checkpoint) j["init_checkpoint"] = init_checkpoint->string();
  if (distill) {
    j["distill"] = {{"embeddings", distill->embeddings.string()},
                    {"epochs", distill->epochs},
                    {"batch_size", distill->batch_size},
                    {"adam", adam_config_to_json(distill->adam)}};
  }
  j["eval_batch_size"] = eval_batch_size;
  return j;
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  StrictObject o(j, "config");
  RunConfig c;
  o.read("variant", c.variant);
  o.read("seed", c.seed);
  std::string out = c.out_dir.string();
  o.read("out_dir", out);
  c.out_dir = resolve(base_dir, out);
  if (const auto* m = o.child("model")) c.model = model_config_from_json(*m);
  if (const auto* s = o.child("schedule")) {
    StrictObject so(*s, "config.schedule");
    so.read("phase1_epochs", c.schedule.phase1_epochs);
    so.read("phase2_epochs", c.schedule.phase2_epochs);
    so.read("batch_size", c.schedule.batch_size);
    so.read("patience", c.schedule.patience);
    if (const auto* a = so.child("adam")) c.schedule.adam = read_adam(*a, "config.schedule.adam", c.schedule.adam);
    so.finish();
  }
  const auto* d = o.child("data");
  if (!d) throw ValidationError("config: missing key 'data'");
  StrictObject dobj(*d, "config.data");
  c.data.train = resolve(base_dir, dobj.require<std::string>("train"));
  std::string p;
  if (dobj.read("valid", p)) c.data.valid = resolve(base_dir, p);
  if (dobj.read("test", p)) c.data.test = resolve(base_dir, p);
  Index size = 0;
  if (dobj.read("train_size", size)) {
    if (size < 1) throw ValidationError("config.data.train_size must be positive");
    c.data.train_size = size;
  }
  dobj.finish();
  if (o.read("init_checkpoint", p)) c.init_checkpoint = resolve(base_dir, p);
  if (const auto* ds = o.child("distill")) {
    StrictObject so(*ds, "config.distill");
    DistillSettings s;
    s.embeddings = resolve(base_dir, so.require<std::string>("embeddings"));
    so.read("epochs", s.epochs);
    so.read("batch_size", s.batch_size);
    if (const auto* a = so.child("adam")) s.adam = read_adam(*a, "config.distill.adam", s.adam);
    so.finish();
    if (s.epochs < 0 || s.batch_size < 1) throw ValidationError("config.distill: invalid epochs or batch_size");
    c.distill = s;
  }
  o.read("eval_batch_size", c.eval_batch_size);
  o.finish();
  if (c.eval_batch_size < 1) throw ValidationError("config.eval_batch_size must be positive");
  c.set_seed(c.seed);
  c.schedule.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, fs::absolute(path).parent_path());
}

std::vector<Utterance> subsample(const std::vector<Utterance>& corpus, Index count, std::uint64_t seed) {
  if (count < 1 || count > static_cast<Index>(corpus.size())) {
    throw ValidationError("train_size " + std::to_string(count) + " outside [1, " + std::to_string(corpus.size()) +
                          "]");
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng(derive_seed(seed, "subsample")).shuffle(order);
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  std::vector<Utterance> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(corpus[i]);
  return out;
}

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / ".lock") {
  fs::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw RuntimeFailure("run directory " + dir.string() + " is locked by another command (" + path_.string() +
                           ")");
    }
    throw RuntimeFailure("cannot lock " + dir.string() + ": " + std::strerror(errno));
  }
  const auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

template <typename Scalar>
TrainRunOutcome train_with(const RunConfig& config, const TrainRunOptions& options) {
  auto train = load_corpus(config.data.train).utterances;
  if (config.data.train_size) train = subsample(train, *config.data.train_size, config.seed);
  std::vector<Utterance> valid, test;
  if (!config.data.valid.empty()) valid = load_corpus(config.data.valid).utterances;
  if (!config.data.test.empty()) test = load_corpus(config.data.test).utterances;

  const auto vocab = build_vocabularies(train);
  ModelConfig model_config = config.model;
  model_config.set_vocabulary_sizes(vocab);
  JointModel<Scalar> model(model_config);
  model.initialize(config.seed);
  if (config.init_checkpoint) load_front_end(*config.init_checkpoint, model, vocab.chars);

  DirectoryLock lock(config.out_dir);
  write_text(config.out_dir / "config.json", config.to_json().dump(2) + "\n");

  Trainer<Scalar> trainer(model, vocab, config.schedule);
  TrainOptions topts;
  topts.out_dir = config.out_dir;
  topts.run_config = config.to_json();
  if (options.resume) {
    const auto last = config.out_dir / "last.ckpt";
    if (!fs::exists(last)) throw ValidationError("nothing to resume: " + last.string() + " is missing");
    topts.resume_from = last;
  }
  if (options.progress) {
    topts.on_epoch = [&](const EpochRecord& r) {
      *options.progress << "epoch " << r.epoch << " phase " << r.phase << " loss " << r.train_loss;
      for (const auto& [task, s] : r.validation) *options.progress << " " << task << " " << format_percent(s.headline_f1);
      *options.progress << "\n";
    };
  }
  TrainRunOutcome outcome;
  outcome.log = trainer.train(train, valid, topts).log;
  outcome.checkpoint = config.out_dir / "model.ckpt";

  if (!test.empty()) {
    auto report = evaluate_model(model, vocab, test, config.eval_batch_size);
    write_text(config.out_dir / "test_metrics.json", report.to_json().dump(2) + "\n");
    RunResult result;
    result.variant = config.variant_label();
    result.train_size = static_cast<Index>(train.size());
    result.seed = config.seed;
    result.corpus_fingerprint = report.corpus_fingerprint;
    for (const auto& [task, s] : report.tasks) result.scores[task] = s.headline();
    write_text(config.out_dir / "result.json", run_result_to_json(result).dump(2) + "\n");
    outcome.test = std::move(report);
    outcome.result = std::move(result);
  }
  return outcome;
}

template <typename Scalar>
DistillRunOutcome distill_with(const RunConfig& config, std::ostream* progress) {
  if (!config.distill) throw ValidationError("config: distillation needs a 'distill' section");
  const auto train = load_corpus(config.data.train).utterances;
  const auto vocab = build_vocabularies(train);
  const auto table = read_embeddings(config.distill->embeddings);
  ModelConfig model_config = config.model;
  model_config.set_vocabulary_sizes(vocab);
  JointModel<Scalar> model(model_config);
  model.initialize(config.seed);

  DistillOptions opts;
  opts.epochs = config.distill->epochs;
  opts.batch_size = config.distill->batch_size;
  opts.adam = config.distill->adam;
  opts.seed = config.seed;

  DirectoryLock lock(config.out_dir);
  DistillRunOutcome outcome;
  outcome.result = distill_embeddings(model, vocab.chars, table, opts);
  outcome.checkpoint = config.out_dir / "distilled.ckpt";
  CheckpointContents<Scalar> contents;
  contents.model = &model;
  contents.vocab = &vocab;
  contents.partial_init = true;
  contents.run_config = config.to_json();
  save_checkpoint(outcome.checkpoint, contents);
  ordered_json summary{{"words", table.size()},
                       {"initial_loss", outcome.result.initial_loss},
                       {"final_loss", outcome.result.final_loss},
                       {"mean_cosine", outcome.result.mean_cosine},
                       {"epoch_loss", outcome.result.epoch_loss}};
  write_text(config.out_dir / "distill.json", summary.dump(2) + "\n");
  if (progress) {
    *progress << "distilled " << table.size() << " words: loss " << outcome.result.initial_loss << " -> "
              << outcome.result.final_loss << ", mean cosine " << outcome.result.mean_cosine << "\n";
  }
  return outcome;
}

template <typename Scalar>
MetricsReport evaluate_with(const fs::path& checkpoint, const fs::path& corpus, Index batch_size) {
  CheckpointHeader header;
  auto model = load_model<Scalar>(checkpoint, &header);
  const auto data = load_corpus(corpus);
  return evaluate_model(*model, header.vocab, data.utterances, batch_size);
}

}  // namespace

TrainRunOutcome run_training(const RunConfig& config, const TrainRunOptions& options) {
  return config.model.precision == Precision::kFloat ? train_with<float>(config, options)
                                                     : train_with<double>(config, options);
}

DistillRunOutcome run_distillation(const RunConfig& config, std::ostream* progress) {
  return config.model.precision == Precision::kFloat ? distill_with<float>(config, progress)
                                                     : distill_with<double>(config, progress);
}

MetricsReport evaluate_checkpoint(const fs::path& checkpoint, const fs::path& corpus, Index batch_size) {
  const auto header = read_checkpoint_header(checkpoint);
  return header.config.precision == Precision::kFloat ? evaluate_with<float>(checkpoint, corpus, batch_size)
                                                      : evaluate_with<double>(checkpoint, corpus, batch_size);
}

}  // namespace jointnlu
