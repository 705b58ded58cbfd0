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

// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Training runs are cached in the work
// directory and reused when their archived config matches, unless --fresh.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "jointnlu/checkpoint.hpp"
#include "jointnlu/cooccurrence.hpp"
#include "jointnlu/eval.hpp"
#include "jointnlu/generator.hpp"
#include "jointnlu/ops.hpp"
#include "jointnlu/run_config.hpp"
#include "jointnlu/verify.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace jointnlu {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeeds[] = {1, 2, 3};
const char* const kTasks[] = {"domain", "intent", "slot"};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct CachedRun {
  std::vector<EpochRecord> log;
  RunResult result;
};

class Acceptance {
 public:
  Acceptance(fs::path source, fs::path work, bool fresh)
      : source_(std::move(source)), work_(std::move(work)), fresh_(fresh) {
    if (fresh_) fs::remove_all(work_);
    fs::create_directories(work_);
  }

  Verdict gradients();
  Verdict oracles();
  Verdict overfit();
  Verdict char_vs_word();
  Verdict multi_vs_single();
  Verdict link_dynamics();
  Verdict distilled_vs_random();
  Verdict distillation_quality();
  Verdict determinism();
  Verdict metric_fixture();

 private:
  const fs::path& demo_corpus();
  json base_config() const;
  CachedRun run(const std::string& name, json config, std::uint64_t seed);
  std::map<std::string, double> mean_scores(const std::string& name, const json& config);
  const DistillRunOutcome& distilled();

  fs::path source_, work_;
  bool fresh_;
  std::optional<fs::path> demo_;
  std::optional<DistillRunOutcome> distilled_;
};

const fs::path& Acceptance::demo_corpus() {
  if (!demo_) {
    const auto dir = work_ / "demo";
    if (!fs::exists(dir / "manifest.json")) {
      write_generated_corpus(CorpusGenerator(load_corpus_spec(source_ / "data" / "demo_spec.json")), dir);
    }
    demo_ = dir;
  }
  return *demo_;
}

json Acceptance::base_config() const {
  std::ifstream in(source_ / "data" / "demo_run.json");
  return json::parse(in);
}

CachedRun Acceptance::run(const std::string& name, json config, std::uint64_t seed) {
  const auto& demo = demo_corpus();
  config["data"] = {{"train", (demo / "train.jsonl").string()},
                    {"valid", (demo / "dev.jsonl").string()},
                    {"test", (demo / "test.jsonl").string()}};
  auto rc = run_config_from_json(config, work_);
  rc.set_seed(seed);
  rc.out_dir = work_ / "runs" / (name + "-seed" + std::to_string(seed));
  const auto expected = rc.to_json().dump(2) + "\n";
  const bool cached = fs::exists(rc.out_dir / "result.json") && slurp(rc.out_dir / "config.json") == expected;
  if (!cached) {
    fs::remove_all(rc.out_dir);
    const auto start = Clock::now();
    std::cerr << "[acceptance] training " << name << " seed " << seed << " ..." << std::flush;
    run_training(rc);
    std::cerr << " " << fixed(seconds_since(start), 0) << " s\n";
  }
  CachedRun out;
  std::ifstream log(rc.out_dir / "epochs.jsonl");
  for (std::string line; std::getline(log, line);) {
    if (!line.empty()) out.log.push_back(EpochRecord::from_json(json::parse(line)));
  }
  out.result = run_result_from_json(json::parse(slurp(rc.out_dir / "result.json")));
  return out;
}

std::map<std::string, double> Acceptance::mean_scores(const std::string& name, const json& config) {
  std::map<std::string, double> mean;
  for (auto seed : kSeeds) {
    for (const auto& [task, score] : run(name, config, seed).result.scores) mean[task] += score / std::size(kSeeds);
  }
  return mean;
}

std::string describe(const std::map<std::string, double>& candidate, const std::map<std::string, double>& baseline,
                     const std::vector<std::string>& tasks) {
  std::ostringstream s;
  for (const auto& t : tasks) {
    s << t << " " << format_percent(candidate.at(t)) << " vs " << format_percent(baseline.at(t)) << "; ";
  }
  return s.str();
}

// ---------------------------------------------------------------- criteria

Verdict Acceptance::gradients() {
  const auto start = Clock::now();
  ModelConfig shape;
  bool ok = true;
  double worst = 0.0;
  std::string failed;
  std::size_t checks = 0;
  for (const auto& e : run_gradient_suite(shape, {})) {
    ++checks;
    worst = std::max(worst, e.result.max_relative_error);
    if (!e.result.passed(1e-4)) {
      ok = false;
      failed += " " + e.name;
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream d;
  d << checks << " checks, max rel err " << std::scientific << std::setprecision(2) << worst << std::defaultfloat
    << ", " << fixed(elapsed, 1) << " s";
  if (!failed.empty()) d << ", failed:" << failed;
  return {ok && elapsed < 120.0, d.str()};
}

Verdict Acceptance::oracles() {
  using testing::random_extent;
  using testing::random_tensor;
  Rng rng(derive_seed(2026, "acceptance-oracles"));
  double matmul_err = 0, conv_err = 0, max_err = 0, softmax_err = 0;
  for (int i = 0; i < 100; ++i) {
    Tape<double> tape;
    const Index m = random_extent(rng, 1, 24), k = random_extent(rng, 1, 24), n = random_extent(rng, 1, 24);
    auto a = random_tensor(rng, {m, k});
    auto b = random_tensor(rng, {k, n});
    const auto got = matmul(tape, a, b);
    const auto ref = oracle::matmul(a, b);
    for (Index j = 0; j < got.size(); ++j) matmul_err = std::max(matmul_err, std::abs(got.data()[j] - ref[j]));
  }
  for (int i = 0; i < 100; ++i) {
    Tape<double> tape;
    const Index d = random_extent(rng, 1, 16), l = random_extent(rng, 1, 6);
    const Index n = random_extent(rng, l, 20), f = random_extent(rng, 1, 16), pad = random_extent(rng, 0, 3);
    auto in = random_tensor(rng, {d, n});
    auto w = random_tensor(rng, {f, d, l});
    auto b = random_tensor(rng, {f});
    const auto got = conv1d(tape, in, w, b, pad);
    const auto ref = oracle::conv1d(in, w, b, pad);
    for (Index j = 0; j < got.size(); ++j) conv_err = std::max(conv_err, std::abs(got.data()[j] - ref[j]));
  }
  for (int i = 0; i < 100; ++i) {
    Tape<double> tape;
    const Index f = random_extent(rng, 1, 16), n = random_extent(rng, 1, 20);
    auto x = random_tensor(rng, {f, n});
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n));
    for (auto& v : mask) v = rng.bernoulli(0.7);
    mask[rng.below(static_cast<std::uint64_t>(n))] = 1;
    const auto got = max_over_time(tape, x, mask);
    const auto ref = oracle::max_over_time(x, mask);
    for (Index j = 0; j < f; ++j) max_err = std::max(max_err, std::abs(got.data()[j] - ref[j]));
  }
  for (int i = 0; i < 100; ++i) {
    Tape<double> tape;
    const Index c = random_extent(rng, 1, 24);
    auto z = random_tensor(rng, {c}, false, i < 50 ? 5.0 : 1e3);
    const auto got = softmax_cross_entropy(tape, z, static_cast<Index>(rng.below(static_cast<std::uint64_t>(c))));
    const auto ref = oracle::softmax({z.data().begin(), z.data().end()});
    for (Index j = 0; j < c; ++j) {
      softmax_err = std::max(softmax_err, std::abs(got.probabilities(j, 0) - static_cast<double>(ref[j])));
    }
  }
  std::ostringstream d;
  d << std::scientific << std::setprecision(1) << "max abs err matmul " << matmul_err << ", conv1d " << conv_err
    << ", max_over_time " << max_err << ", softmax " << softmax_err;
  return {matmul_err <= 1e-12 && conv_err <= 1e-12 && max_err <= 1e-12 && softmax_err <= 1e-10, d.str()};
}

Verdict Acceptance::overfit() {
  const auto start = Clock::now();
  const auto dir = work_ / "overfit";
  fs::remove_all(dir);
  CorpusGenerator generator(load_corpus_spec(source_ / "data" / "demo_spec.json"));
  const auto corpus = generator.sample_many(7, "overfit", 100, SuffixPool::kTrain);
  fs::create_directories(dir);
  write_corpus(dir / "train.jsonl", corpus);
  auto config = base_config();
  config["data"] = {{"train", (dir / "train.jsonl").string()}, {"valid", (dir / "train.jsonl").string()}};
  config["schedule"]["phase1_epochs"] = 150;
  config["schedule"]["phase2_epochs"] = 150;
  auto rc = run_config_from_json(config, dir);
  rc.out_dir = dir / "run";
  const auto outcome = run_training(rc);
  const auto report = evaluate_checkpoint(outcome.checkpoint, dir / "train.jsonl");
  bool ok = true;
  std::ostringstream d;
  for (const char* task : kTasks) {
    const double acc = report.tasks.at(task).accuracy;
    ok = ok && acc >= 0.99;
    d << task << " acc " << format_percent(acc) << "; ";
  }
  const double elapsed = seconds_since(start);
  d << outcome.log.size() << " epochs, " << fixed(elapsed, 0) << " s";
  return {ok && elapsed < 600.0 && outcome.log.size() <= 300, d.str()};
}

Verdict Acceptance::char_vs_word() {
  auto words = base_config();
  words["model"]["representation"] = "words";
  const auto c = mean_scores("char-multi-links", base_config());
  const auto w = mean_scores("word-multi-links", words);
  bool ok = true;
  for (const char* t : kTasks) ok = ok && c.at(t) > w.at(t);
  return {ok, "char vs word: " + describe(c, w, {"domain", "intent", "slot"})};
}

Verdict Acceptance::multi_vs_single() {
  const auto multi = mean_scores("char-multi-links", base_config());
  std::map<std::string, double> single;
  for (const char* task : {"intent", "slot"}) {
    auto config = base_config();
    config["model"]["tasks"] = {task};
    config["model"]["links"] = false;
    single[task] = mean_scores(std::string("char-") + task, config).at(task);
  }
  const bool ok = multi.at("intent") >= single.at("intent") && multi.at("slot") >= single.at("slot");
  return {ok, "multi vs single: " + describe(multi, single, {"intent", "slot"})};
}

Verdict Acceptance::link_dynamics() {
  const auto config = base_config();
  const int phase1 = config["schedule"]["phase1_epochs"];
  const double n = std::size(kSeeds);
  double last_phase1 = 0, best_phase1 = 0, dip = 0;
  std::map<int, double> after;  // epoch -> mean slot accuracy, phase 2
  for (auto seed : kSeeds) {
    const auto log = run("char-multi-links", config, seed).log;
    double best = 0;
    for (const auto& r : log) {
      const double acc = r.validation.at("slot").accuracy;
      if (r.epoch <= phase1) best = std::max(best, acc);
      if (r.epoch == phase1) last_phase1 += acc / n;
      if (r.epoch > phase1) after[r.epoch] += acc / n;
      if (r.epoch == phase1 + 1) {
        // Lowest point within the first phase-2 epoch: right after the new
        // links are installed, or at the end of that epoch.
        double low = acc;
        if (r.link_start_validation.count("slot")) low = std::min(low, r.link_start_validation.at("slot").accuracy);
        dip += low / n;
      }
    }
    best_phase1 += best / n;
  }
  double recovered = 0;
  int recovered_at = 0;
  for (const auto& [epoch, acc] : after) {
    if (epoch > phase1 + 10) break;
    if (acc > best_phase1 && !recovered_at) recovered_at = epoch;
    recovered = std::max(recovered, acc);
  }
  std::ostringstream d;
  d << "slot val acc: end of phase 1 " << fixed(100 * last_phase1, 3) << ", best phase 1 " << fixed(100 * best_phase1, 3)
    << ", at link start " << fixed(100 * dip, 3) << ", best within 10 epochs " << fixed(100 * recovered, 3);
  if (recovered_at) d << " (above phase 1 from epoch " << recovered_at << ")";
  return {dip < last_phase1 && recovered_at > 0, d.str()};
}

const DistillRunOutcome& Acceptance::distilled() {
  if (!distilled_) {
    const auto dir = work_ / "distill";
    const auto table_path = dir / "cooccurrence.txt";
    if (!fs::exists(table_path)) {
      std::ifstream recipe(source_ / "data" / "cooccurrence_recipe.json");
      const auto options = cooccurrence_options_from_json(json::parse(recipe));
      CorpusGenerator generator(load_corpus_spec(source_ / "data" / "demo_spec.json"));
      fs::create_directories(dir);
      write_embeddings(table_path, cooccurrence_embeddings(generator, options));
    }
    auto config = base_config();
    const auto& demo = demo_corpus();
    config["data"] = {{"train", (demo / "train.jsonl").string()}};
    config["distill"] = {{"embeddings", table_path.string()}, {"epochs", 60}};
    auto rc = run_config_from_json(config, dir);
    rc.out_dir = dir / "front-end";
    const auto summary = rc.out_dir / "distill.json";
    if (fs::exists(summary) && slurp(rc.out_dir / "config.json") == rc.to_json().dump(2) + "\n") {
      DistillRunOutcome cached;
      cached.result.mean_cosine = json::parse(slurp(summary))["mean_cosine"];
      cached.checkpoint = rc.out_dir / "distilled.ckpt";
      distilled_ = cached;
    } else {
      fs::remove_all(rc.out_dir);
      std::cerr << "[acceptance] distilling ..." << std::flush;
      const auto start = Clock::now();
      distilled_ = run_distillation(rc);
      std::ofstream(rc.out_dir / "config.json") << rc.to_json().dump(2) << "\n";
      std::cerr << " " << fixed(seconds_since(start), 0) << " s\n";
    }
  }
  return *distilled_;
}

Verdict Acceptance::distilled_vs_random() {
  auto config = base_config();
  config["init_checkpoint"] = distilled().checkpoint.string();
  const auto d = mean_scores("char-multi-links-distilled", config);
  const auto r = mean_scores("char-multi-links", base_config());
  bool ok = true;
  for (const char* t : kTasks) ok = ok && d.at(t) >= r.at(t);
  return {ok, "distilled vs random: " + describe(d, r, {"domain", "intent", "slot"})};
}

Verdict Acceptance::distillation_quality() {
  const double cos = distilled().result.mean_cosine;
  return {cos >= 0.95, "mean cosine " + fixed(cos, 4)};
}

Verdict Acceptance::determinism() {
  std::vector<std::string> problems;
  const auto dir = work_ / "determinism";
  fs::remove_all(dir);
  CorpusGenerator generator(load_corpus_spec(source_ / "data" / "demo_spec.json"));
  fs::create_directories(dir);
  write_corpus(dir / "train.jsonl", generator.sample_many(3, "determinism", 200, SuffixPool::kTrain));
  write_corpus(dir / "dev.jsonl", generator.sample_many(4, "determinism", 50, SuffixPool::kTrain));

  // Identical seeds give identical epoch logs, in both precisions.
  for (const char* precision : {"float", "double"}) {
    auto config = base_config();
    config["model"]["precision"] = precision;
    config["data"] = {{"train", (dir / "train.jsonl").string()}, {"valid", (dir / "dev.jsonl").string()}};
    config["schedule"]["phase1_epochs"] = 2;
    config["schedule"]["phase2_epochs"] = 2;
    std::string logs[2];
    for (int i = 0; i < 2; ++i) {
      auto rc = run_config_from_json(config, dir);
      rc.out_dir = dir / (std::string(precision) + std::to_string(i));
      run_training(rc);
      logs[i] = slurp(rc.out_dir / "epochs.jsonl");
    }
    if (logs[0].empty() || logs[0] != logs[1]) problems.push_back(std::string(precision) + " epoch logs differ");
  }

  // Save, load and save again: same bytes, same parameters.
  {
    CheckpointHeader header;
    const auto path = dir / "double0" / "model.ckpt";
    auto model = load_model<double>(path, &header);
    CheckpointContents<double> contents;
    contents.model = model.get();
    contents.vocab = &header.vocab;
    const auto copy = dir / "copy.ckpt";
    save_checkpoint(copy, contents);
    auto reloaded = load_model<double>(copy);
    bool same = true;
    for (const auto& p : model->parameters().all()) {
      const auto& a = p.tensor.data();
      const auto& b = reloaded->parameters().at(p.name).tensor.data();
      same = same && a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
    }
    if (!same) problems.push_back("checkpoint round trip changed parameters");
    const auto again = dir / "copy2.ckpt";
    save_checkpoint(again, contents);
    if (slurp(copy) != slurp(again)) problems.push_back("checkpoint bytes differ between saves");
  }

  // Zero-valued links leave the forward pass unchanged.
  {
    const auto train = load_corpus(dir / "train.jsonl").utterances;
    const auto vocab = build_vocabularies(train);
    for (auto rep : {Representation::kCharacters, Representation::kWords}) {
      ModelConfig with_cfg;
      with_cfg.representation = rep;
      with_cfg.set_vocabulary_sizes(vocab);
      auto without_cfg = with_cfg;
      without_cfg.links = false;
      JointModel<double> with(with_cfg), without(without_cfg);
      with.initialize(5);
      without.initialize(5);
      for (const auto& name : with.link_parameter_names()) testing::fill(with.parameters().at(name).tensor, 0.0);
      with.set_links_active(true);
      const auto batch = encode_batch(train, vocab, with_cfg.max_length, with_cfg.min_char_width());
      Tape<double> t1, t2;
      const auto a = with.forward(t1, batch);
      const auto b = without.forward(t2, batch);
      for (const auto& [x, y] : {std::pair{a.domain_logits, b.domain_logits}, std::pair{a.intent_logits, b.intent_logits},
                                 std::pair{a.slot_logits, b.slot_logits}}) {
        const auto& u = x->data();
        const auto& v = y->data();
        if (u.size() != v.size() || std::memcmp(u.data(), v.data(), u.size() * sizeof(double)) != 0) {
          problems.push_back("zero links change the forward pass");
          break;
        }
      }
    }
  }
  std::string detail = "epoch logs, checkpoint round trip and zero-link forward are bit-identical";
  if (!problems.empty()) {
    detail.clear();
    for (const auto& p : problems) detail += p + "; ";
  }
  return {problems.empty(), detail};
}

Verdict Acceptance::metric_fixture() {
  std::vector<std::string> problems;
  // Hand-counted confusion matrix over classes {O, A, B}:
  //   gold O: predicted O 3, A 1
  //   gold A: predicted A 2, B 1
  //   gold B: predicted O 1, B 2
  const std::vector<Index> gold{0, 0, 0, 0, 1, 1, 1, 2, 2, 2};
  const std::vector<Index> pred{0, 0, 0, 1, 1, 1, 2, 0, 2, 2};
  const auto s = f1_scores(pred, gold, {"O", "A", "B"}, "slot", 0);
  auto near = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  // A: tp 2, fp 1, fn 1. B: tp 2, fp 1, fn 1. O: tp 3, fp 1, fn 1.
  if (!near(s.accuracy, 0.7) || !near(s.micro_f1, 0.7)) problems.push_back("micro-F1");
  if (!near(s.classes[1].precision, 2.0 / 3) || !near(s.classes[1].recall, 2.0 / 3)) problems.push_back("class A");
  if (!near(s.classes[0].f1, 0.75) || !near(s.macro_f1, (0.75 + 2.0 / 3 + 2.0 / 3) / 3)) problems.push_back("macro-F1");
  // Excluding O: tp 4, fp = predicted A/B that are wrong (A from O, B from A) = 2,
  // fn = gold A/B missed (A->B, B->O) = 2.
  if (!s.micro_f1_excluding || !near(*s.micro_f1_excluding, 8.0 / 12)) problems.push_back("micro-F1 without O");

  auto run = [](const std::string& variant, double d, double i, double sl) {
    RunResult r;
    r.variant = variant;
    r.train_size = 10000;
    r.seed = 1;
    r.corpus_fingerprint = "fixture";
    r.scores = {{"domain", d}, {"intent", i}, {"slot", sl}};
    return r;
  };
  const auto report = ablation_report({run("char", 0.7959, 0.7375, 0.6955), run("word", 0.7465, 0.6636, 0.5947)},
                                      {{"char vs word", "word", "char"}}, {"domain", "intent", "slot"});
  for (const auto& c : report.cells) {
    if (c.best != (c.variant == "char")) problems.push_back("best flag on " + c.variant + "/" + c.task);
  }
  const auto text = report.to_text();
  for (const char* cell : {"79.59 *", "73.75 *", "69.55 *", "74.65", "66.36", "59.47"}) {
    if (text.find(cell) == std::string::npos) problems.push_back(std::string("missing cell ") + cell);
  }
  std::string detail = "hand-counted scores and the fixture row match";
  if (!problems.empty()) {
    detail.clear();
    for (const auto& p : problems) detail += p + "; ";
  }
  return {problems.empty(), detail};
}

}  // namespace
}  // namespace jointnlu

int main(int argc, char** argv) {
  using namespace jointnlu;
  CLI::App app{"Acceptance criteria runner"};
  std::string source = JOINTNLU_SOURCE_DIR, work = "acceptance";
  bool fresh = false;
  std::vector<int> only;
  app.add_option("--source", source, "Repository root (for data/)");
  app.add_option("--work", work, "Work directory for corpora and runs");
  app.add_flag("--fresh", fresh, "Discard cached runs");
  app.add_option("--only", only, "Criteria to run (1-10)");
  CLI11_PARSE(app, argc, argv);

  Acceptance acc(source, work, fresh);
  const std::vector<std::pair<std::string, Verdict (Acceptance::*)()>> criteria{
      {"gradient check", &Acceptance::gradients},
      {"oracle equivalence", &Acceptance::oracles},
      {"overfit 100 utterances", &Acceptance::overfit},
      {"char beats word", &Acceptance::char_vs_word},
      {"multi-task vs single-task", &Acceptance::multi_vs_single},
      {"link dip and recovery", &Acceptance::link_dynamics},
      {"distilled vs random init", &Acceptance::distilled_vs_random},
      {"distillation cosine", &Acceptance::distillation_quality},
      {"determinism and serialization", &Acceptance::determinism},
      {"metric fixture", &Acceptance::metric_fixture},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Verdict v;
    try {
      v = (acc.*criteria[i].second)();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << std::setw(2) << id << "] " << criteria[i].first << ": "
              << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
