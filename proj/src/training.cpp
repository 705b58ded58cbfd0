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

#include "jointnlu/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "jointnlu/checkpoint.hpp"
#include "jointnlu/init.hpp"
#include "jointnlu/json_util.hpp"

namespace jointnlu {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

void TrainingSchedule::validate() const {
  if (phase1_epochs < 0 || phase2_epochs < 0) throw ValidationError("schedule: negative epoch count");
  if (total_epochs() < 1) throw ValidationError("schedule: at least one epoch is required");
  if (batch_size < 1) throw ValidationError("schedule: batch_size must be positive");
  if (patience < 0) throw ValidationError("schedule: patience must be non-negative");
}

ordered_json training_state_to_json(const TrainingState& s) {
  return {{"epoch", s.epoch},
          {"step", s.step},
          {"links_active", s.links_active},
          {"links_initialized", s.links_initialized},
          {"best_metric", s.best_metric},
          {"best_epoch", s.best_epoch},
          {"stale_epochs", s.stale_epochs},
          {"stopped_early", s.stopped_early}};
}

TrainingState training_state_from_json(const json& j) {
  StrictObject o(j, "training_state");
  TrainingState s;
  o.read("epoch", s.epoch);
  o.read("step", s.step);
  o.read("links_active", s.links_active);
  o.read("links_initialized", s.links_initialized);
  o.read("best_metric", s.best_metric);
  o.read("best_epoch", s.best_epoch);
  o.read("stale_epochs", s.stale_epochs);
  o.read("stopped_early", s.stopped_early);
  o.finish();
  return s;
}

ordered_json EpochRecord::to_json() const {
  ordered_json j;
  j["epoch"] = epoch;
  j["phase"] = phase;
  j["links_active"] = links_active;
  j["step"] = step;
  j["train_loss"] = train_loss;
  j["train_task_loss"] = train_task_loss;
  auto v = ordered_json::object();
  for (const auto& [task, s] : validation) {
    v[task] = {{"accuracy", s.accuracy}, {"micro_f1", s.micro_f1}, {"headline_f1", s.headline_f1}};
  }
  j["validation"] = v;
  j["validation_mean_f1"] = validation_mean_f1;
  if (!link_start_validation.empty()) {
    auto w = ordered_json::object();
    for (const auto& [task, s] : link_start_validation) {
      w[task] = {{"accuracy", s.accuracy}, {"micro_f1", s.micro_f1}, {"headline_f1", s.headline_f1}};
    }
    j["link_start_validation"] = w;
  }
  return j;
}

EpochRecord EpochRecord::from_json(const json& j) {
  EpochRecord r;
  try {
    r.epoch = j.at("epoch").get<int>();
    r.phase = j.at("phase").get<int>();
    r.links_active = j.at("links_active").get<bool>();
    r.step = j.at("step").get<std::int64_t>();
    r.train_loss = j.at("train_loss").get<double>();
    r.train_task_loss = j.at("train_task_loss").get<std::map<std::string, double>>();
    auto summary = [](const json& s) {
      return TaskSummary{s.at("accuracy").get<double>(), s.at("micro_f1").get<double>(),
                         s.at("headline_f1").get<double>()};
    };
    for (const auto& [task, s] : j.at("validation").items()) r.validation[task] = summary(s);
    if (j.contains("link_start_validation")) {
      for (const auto& [task, s] : j.at("link_start_validation").items()) r.link_start_validation[task] = summary(s);
    }
    r.validation_mean_f1 = j.at("validation_mean_f1").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed epoch record: ") + e.what());
  }
  return r;
}

std::string corpus_fingerprint(const std::vector<Utterance>& utterances) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(corpus_to_string(utterances))));
  return buf;
}

// ---------------------------------------------------------------- evaluation

template <typename Scalar>
std::vector<Prediction> predict_corpus(const JointModel<Scalar>& model, const Vocabularies& vocab,
                                       const std::vector<Utterance>& utterances, Index batch_size) {
  std::vector<Prediction> out;
  out.reserve(utterances.size());
  const auto& cfg = model.config();
  const auto other = vocab.slots.class_of(kOtherSlot);
  for (std::size_t start = 0; start < utterances.size(); start += static_cast<std::size_t>(batch_size)) {
    std::vector<const Utterance*> ptrs;
    for (std::size_t i = start; i < std::min(utterances.size(), start + static_cast<std::size_t>(batch_size)); ++i) {
      ptrs.push_back(&utterances[i]);
    }
    auto preds = model.predict(encode_batch(ptrs, vocab, cfg.max_length, cfg.min_char_width()));
    for (std::size_t k = 0; k < preds.size(); ++k) {
      auto& p = preds[k];
      // Tokens past max_length are never seen by the model.
      if (cfg.tasks.slot) {
        while (p.slots.size() < ptrs[k]->tokens.size()) {
          p.slots.push_back(other.value_or(0));
          p.slot_probabilities.push_back(0.0);
        }
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

template <typename Scalar>
MetricsReport evaluate_model(const JointModel<Scalar>& model, const Vocabularies& vocab,
                             const std::vector<Utterance>& utterances, Index batch_size) {
  if (utterances.empty()) throw ValidationError("evaluate: empty corpus");
  if (auto unknown = unknown_labels(vocab, inventory_of(utterances)); !unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
    throw ValidationError("evaluate: corpus has labels the model was not trained on: " + list);
  }
  const auto preds = predict_corpus(model, vocab, utterances, batch_size);
  const auto& tasks = model.config().tasks;
  MetricsReport report;
  report.utterances = static_cast<Index>(utterances.size());
  report.config_fingerprint = [&] {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(model_config_to_json(model.config()).dump())));
    return std::string(buf);
  }();
  report.corpus_fingerprint = corpus_fingerprint(utterances);
  std::vector<Index> gold_d, pred_d, gold_i, pred_i, gold_s, pred_s;
  for (std::size_t n = 0; n < utterances.size(); ++n) {
    const auto& u = utterances[n];
    const auto& p = preds[n];
    report.tokens += static_cast<Index>(u.tokens.size());
    if (tasks.domain) {
      gold_d.push_back(*vocab.domains.class_of(u.domain));
      pred_d.push_back(*p.domain);
    }
    if (tasks.intent) {
      gold_i.push_back(*vocab.intents.class_of(u.intent));
      pred_i.push_back(*p.intent);
    }
    if (tasks.slot) {
      for (std::size_t j = 0; j < u.slots.size(); ++j) {
        gold_s.push_back(*vocab.slots.class_of(u.slots[j]));
        pred_s.push_back(p.slots[j]);
      }
    }
  }
  if (tasks.domain) report.tasks["domain"] = f1_scores(pred_d, gold_d, vocab.domains.entries(), "domain");
  if (tasks.intent) report.tasks["intent"] = f1_scores(pred_i, gold_i, vocab.intents.entries(), "intent");
  if (tasks.slot) {
    report.tasks["slot"] =
        f1_scores(pred_s, gold_s, vocab.slots.entries(), "slot", vocab.slots.class_of(kOtherSlot));
  }
  return report;
}

// ---------------------------------------------------------------- trainer

template <typename Scalar>
Trainer<Scalar>::Trainer(JointModel<Scalar>& model, const Vocabularies& vocab, TrainingSchedule schedule)
    : model_(model), vocab_(vocab), schedule_(std::move(schedule)), adam_(schedule_.adam) {
  schedule_.validate();
}

template <typename Scalar>
std::set<std::string> Trainer<Scalar>::frozen_parameters() const {
  std::set<std::string> frozen;
  if (model_.config().links && !model_.links_active()) {
    for (const auto& name : model_.link_parameter_names()) frozen.insert(name);
  }
  return frozen;
}

template <typename Scalar>
void Trainer<Scalar>::begin_epoch(int epoch) {
  if (!model_.config().links || state_.links_initialized) return;
  if (epoch <= schedule_.phase1_epochs) {
    model_.set_links_active(false);
    return;
  }
  // Phase boundary: fresh link weights and fresh optimizer state.
  for (const auto& name : model_.link_parameter_names()) {
    initialize_parameter(model_.parameters().at(name), schedule_.seed, "phase2/");
    adam_.reset(name);
  }
  model_.set_links_active(true);
  state_.links_initialized = true;
}

template <typename Scalar>
double Trainer<Scalar>::run_epoch(int epoch, const std::vector<Utterance>& train,
                                  std::map<std::string, double>& task_loss) {
  const auto& cfg = model_.config();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng(derive_seed(schedule_.seed, "shuffle", static_cast<std::uint64_t>(epoch))).shuffle(order);
  Rng unk(derive_seed(schedule_.seed, "unk-words", static_cast<std::uint64_t>(epoch)));
  const bool replace_words = cfg.representation == Representation::kWords && cfg.unk_word_rate > 0;
  const auto frozen = frozen_parameters();
  const auto& store = model_.parameters();

  double total = 0.0, domain = 0.0, intent = 0.0, slot = 0.0;
  const std::size_t bs = static_cast<std::size_t>(schedule_.batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    std::vector<const Utterance*> ptrs;
    for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i) ptrs.push_back(&train[order[i]]);
    auto batch = encode_batch(ptrs, vocab_, cfg.max_length, cfg.min_char_width());
    if (replace_words) {
      for (std::size_t pos = 0; pos < batch.word_ids.size(); ++pos) {
        if (batch.mask[pos] && unk.bernoulli(cfg.unk_word_rate)) batch.word_ids[pos] = Vocabulary::kUnk;
      }
    }
    Tape<Scalar> tape;
    auto terms = model_.loss(tape, model_.forward(tape, batch), batch);
    const double value = static_cast<double>(terms.total.item());
    if (!std::isfinite(value)) {
      throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(state_.step + 1));
    }
    store.zero_grad();
    tape.backward(terms.total);
    adam_.step(store, frozen);
    ++state_.step;
    const double w = static_cast<double>(ptrs.size());
    total += value * w;
    domain += terms.domain * w;
    intent += terms.intent * w;
    slot += terms.slot * w;
  }
  const double n = static_cast<double>(train.size());
  if (cfg.tasks.domain) task_loss["domain"] = domain / n;
  if (cfg.tasks.intent) task_loss["intent"] = intent / n;
  if (cfg.tasks.slot) task_loss["slot"] = slot / n;
  return total / n;
}

namespace {

template <typename Scalar>
std::vector<ColVector<Scalar>> snapshot(const ParameterStore<Scalar>& store) {
  std::vector<ColVector<Scalar>> out;
  for (const auto& p : store.all()) {
    auto d = p.tensor.data();
    out.emplace_back(Eigen::Map<const ColVector<Scalar>>(d.data(), static_cast<Index>(d.size())));
  }
  return out;
}

template <typename Scalar>
void restore(const ParameterStore<Scalar>& store, const std::vector<ColVector<Scalar>>& values) {
  for (std::size_t i = 0; i < store.all().size(); ++i) {
    Tensor<Scalar> t = store.all()[i].tensor;
    auto d = t.mutable_data();
    std::copy(values[i].data(), values[i].data() + values[i].size(), d.begin());
  }
}

void write_log(const fs::path& path, const std::vector<EpochRecord>& log) {
  std::ofstream out(path, std::ios::trunc);
  for (const auto& r : log) out << r.to_json().dump() << "\n";
  if (!out) throw RuntimeFailure("cannot write " + path.string());
}

std::vector<EpochRecord> read_log(const fs::path& path) {
  std::vector<EpochRecord> log;
  std::ifstream in(path);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) log.push_back(EpochRecord::from_json(json::parse(line)));
  }
  return log;
}

}  // namespace

template <typename Scalar>
TrainResult Trainer<Scalar>::train(const std::vector<Utterance>& train, const std::vector<Utterance>& valid,
                                   const TrainOptions& options) {
  if (train.empty()) throw ValidationError("train: empty training corpus");
  const auto& cfg = model_.config();
  const auto& store = model_.parameters();
  const bool files = !options.out_dir.empty();
  if (files) fs::create_directories(options.out_dir);
  const fs::path log_path = options.out_dir / "epochs.jsonl";
  const fs::path last_path = options.out_dir / "last.ckpt";
  const fs::path best_path = options.out_dir / "model.ckpt";

  TrainResult result;
  std::optional<std::vector<ColVector<Scalar>>> best;
  if (options.resume_from) {
    const auto header = read_checkpoint_header(*options.resume_from);
    if (!header.state) throw ValidationError(options.resume_from->string() + " holds no training state");
    if (!(header.vocab == vocab_)) throw ValidationError("resume: vocabularies differ from the checkpoint");
    load_checkpoint_into(*options.resume_from, header, model_, &adam_);
    adam_.set_config(schedule_.adam);
    state_ = *header.state;
    if (files && fs::exists(log_path)) {
      for (auto& r : read_log(log_path)) {
        if (r.epoch <= state_.epoch) result.log.push_back(std::move(r));
      }
      write_log(log_path, result.log);
    }
    if (state_.best_epoch > 0 && files && fs::exists(best_path)) {
      best = snapshot(load_model<Scalar>(best_path)->parameters());
    }
  } else {
    state_ = {};
    if (cfg.links) model_.set_links_active(schedule_.phase1_epochs == 0);
    state_.links_initialized = cfg.links && schedule_.phase1_epochs == 0;
    if (files) write_log(log_path, {});
  }

  auto save = [&](const fs::path& path, bool with_optimizer) {
    CheckpointContents<Scalar> c;
    c.model = &model_;
    c.vocab = &vocab_;
    c.adam = with_optimizer ? &adam_ : nullptr;
    c.state = state_;
    c.run_config = options.run_config;
    save_checkpoint(path, c);
  };

  int ran = 0;
  for (int epoch = state_.epoch + 1; epoch <= schedule_.total_epochs() && !state_.stopped_early; ++epoch) {
    if (options.stop_after_epoch && ran >= *options.stop_after_epoch) break;
    const bool links_were_initialized = state_.links_initialized;
    begin_epoch(epoch);
    EpochRecord rec;
    if (state_.links_initialized && !links_were_initialized && !valid.empty()) {
      const auto report = evaluate_model(model_, vocab_, valid);
      for (const auto& [task, s] : report.tasks) {
        rec.link_start_validation[task] = {s.accuracy, s.micro_f1, s.headline()};
      }
    }
    rec.epoch = epoch;
    rec.phase = epoch <= schedule_.phase1_epochs ? 1 : 2;
    rec.links_active = model_.links_active();
    rec.train_loss = run_epoch(epoch, train, rec.train_task_loss);
    rec.step = state_.step;
    state_.epoch = epoch;
    state_.links_active = model_.links_active();
    if (!valid.empty()) {
      const auto report = evaluate_model(model_, vocab_, valid);
      for (const auto& [task, s] : report.tasks) rec.validation[task] = {s.accuracy, s.micro_f1, s.headline()};
      rec.validation_mean_f1 = report.mean_headline();
      if (rec.validation_mean_f1 > state_.best_metric) {
        state_.best_metric = rec.validation_mean_f1;
        state_.best_epoch = epoch;
        state_.stale_epochs = 0;
        best = snapshot(store);
        if (files) save(best_path, false);
      } else if (schedule_.patience > 0 && ++state_.stale_epochs >= schedule_.patience) {
        state_.stopped_early = true;
      }
    }
    result.log.push_back(rec);
    if (files) {
      std::ofstream(log_path, std::ios::app) << rec.to_json().dump() << "\n";
      save(last_path, true);
    }
    if (options.on_epoch) options.on_epoch(rec);
    ++ran;
  }

  const bool finished = state_.stopped_early || state_.epoch >= schedule_.total_epochs();
  if (finished) {
    if (options.restore_best && best) restore(store, *best);
    if (files) {
      if (!(options.restore_best && best)) save(best_path, false);
    }
  }
  result.state = state_;
  return result;
}

// ---------------------------------------------------------------- embeddings

EmbeddingTable read_embeddings(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embedding file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty embedding file");
  std::istringstream head(line);
  long long count = 0, dim = 0;
  if (!(head >> count >> dim) || count < 1 || dim < 1) {
    throw ValidationError(path.string() + ":1: expected '<vocab_size> <dim>'");
  }
  EmbeddingTable table;
  table.vectors.resize(dim, count);
  for (long long i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      throw ValidationError(path.string() + ": expected " + std::to_string(count) + " vectors, found " +
                            std::to_string(i));
    }
    std::istringstream row(line);
    std::string word;
    if (!(row >> word)) throw ValidationError(path.string() + ":" + std::to_string(i + 2) + ": missing word");
    for (long long d = 0; d < dim; ++d) {
      double v;
      if (!(row >> v)) {
        throw ValidationError(path.string() + ":" + std::to_string(i + 2) + ": expected " + std::to_string(dim) +
                              " values");
      }
      table.vectors(d, i) = v;
    }
    if (std::string extra; row >> extra) {
      throw ValidationError(path.string() + ":" + std::to_string(i + 2) + ": more than " + std::to_string(dim) +
                            " values");
    }
    table.words.push_back(word);
  }
  return table;
}

void write_embeddings(const fs::path& path, const EmbeddingTable& table) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + tmp.string());
    out << table.size() << " " << table.dim() << "\n";
    char buf[32];
    for (Index i = 0; i < table.size(); ++i) {
      out << table.words[static_cast<std::size_t>(i)];
      for (Index d = 0; d < table.dim(); ++d) {
        std::snprintf(buf, sizeof buf, " %.17g", table.vectors(d, i));
        out << buf;
      }
      out << "\n";
    }
    if (!out) throw RuntimeFailure("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

PackedWords pack_words(const std::vector<std::string>& words, const Vocabulary& chars, Index min_width) {
  std::vector<std::vector<Index>> forms;
  forms.reserve(words.size());
  for (const auto& w : words) {
    std::vector<Index> ids;
    for (const auto& c : utf8_characters(w)) ids.push_back(chars.index_of(c));
    forms.push_back(std::move(ids));
  }
  return PackedWords::pack(forms, min_width);
}

namespace {

template <typename Scalar>
void check_distillable(const JointModel<Scalar>& model, const EmbeddingTable& table) {
  if (model.config().representation != Representation::kCharacters) {
    throw ValidationError("distill: the model must compose words from characters");
  }
  if (table.dim() != model.config().word_dim) {
    throw ValidationError("distill: embedding dimension " + std::to_string(table.dim()) +
                          " does not match the word width " + std::to_string(model.config().word_dim));
  }
  if (table.size() < 1) throw ValidationError("distill: empty embedding table");
}

}  // namespace

template <typename Scalar>
RowMatrix<Scalar> composed_vectors(const JointModel<Scalar>& model, const Vocabulary& chars,
                              const std::vector<std::string>& words) {
  RowMatrix<Scalar> out(model.config().word_dim, static_cast<Index>(words.size()));
  const std::size_t chunk = 256;
  for (std::size_t start = 0; start < words.size(); start += chunk) {
    std::vector<std::string> part(words.begin() + static_cast<std::ptrdiff_t>(start),
                                  words.begin() + static_cast<std::ptrdiff_t>(std::min(words.size(), start + chunk)));
    Tape<Scalar> tape;
    tape.set_recording(false);
    auto v = model.compose_words(tape, pack_words(part, chars, model.config().min_char_width()));
    out.middleCols(static_cast<Index>(start), static_cast<Index>(part.size())) = v.matrix();
  }
  return out;
}

template <typename Scalar>
double composed_cosine(const JointModel<Scalar>& model, const Vocabulary& chars, const EmbeddingTable& table,
                       std::vector<double>* per_word) {
  check_distillable(model, table);
  const RowMatrix<double> composed = composed_vectors(model, chars, table.words).template cast<double>();
  double total = 0.0;
  if (per_word) per_word->clear();
  for (Index i = 0; i < table.size(); ++i) {
    const double denom = composed.col(i).norm() * table.vectors.col(i).norm();
    const double c = denom > 0 ? composed.col(i).dot(table.vectors.col(i)) / denom : 0.0;
    total += c;
    if (per_word) per_word->push_back(c);
  }
  return total / static_cast<double>(table.size());
}

template <typename Scalar>
DistillResult distill_embeddings(JointModel<Scalar>& model, const Vocabulary& chars, const EmbeddingTable& table,
                                 const DistillOptions& options) {
  check_distillable(model, table);
  if (options.epochs < 0 || options.batch_size < 1) throw ValidationError("distill: invalid epochs or batch size");
  const auto& store = model.parameters();
  const auto front = model.front_parameter_names();
  std::set<std::string> frozen;
  for (const auto& p : store.all()) {
    if (std::find(front.begin(), front.end(), p.name) == front.end()) frozen.insert(p.name);
  }
  const RowMatrix<Scalar> targets = table.vectors.template cast<Scalar>();
  const Index min_width = model.config().min_char_width();
  const auto full_loss = [&] {
    const RowMatrix<Scalar> composed = composed_vectors(model, chars, table.words);
    return static_cast<double>((composed - targets).colwise().squaredNorm().sum()) /
           static_cast<double>(table.size());
  };

  DistillResult result;
  result.initial_loss = full_loss();
  Adam<Scalar> adam(options.adam);
  std::vector<std::size_t> order(table.words.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t bs = static_cast<std::size_t>(options.batch_size);
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    Rng(derive_seed(options.seed, "distill", static_cast<std::uint64_t>(epoch))).shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::vector<std::string> words;
      RowMatrix<Scalar> target(targets.rows(), static_cast<Index>(end - start));
      for (std::size_t i = start; i < end; ++i) {
        words.push_back(table.words[order[i]]);
        target.col(static_cast<Index>(i - start)) = targets.col(static_cast<Index>(order[i]));
      }
      Tape<Scalar> tape;
      auto loss = squared_error(tape, model.compose_words(tape, pack_words(words, chars, min_width)), target);
      const double value = static_cast<double>(loss.item());
      if (!std::isfinite(value)) throw DivergenceError("distill: non-finite loss at epoch " + std::to_string(epoch));
      store.zero_grad();
      tape.backward(loss);
      adam.step(store, frozen);
      total += value * static_cast<double>(end - start);
    }
    result.epoch_loss.push_back(total / static_cast<double>(order.size()));
  }
  result.final_loss = full_loss();
  result.mean_cosine = composed_cosine(model, chars, table);
  return result;
}

#define JOINTNLU_INSTANTIATE(S)                                                                                   \
  template std::vector<Prediction> predict_corpus<S>(const JointModel<S>&, const Vocabularies&,                   \
                                                     const std::vector<Utterance>&, Index);                       \
  template MetricsReport evaluate_model<S>(const JointModel<S>&, const Vocabularies&,                             \
                                           const std::vector<Utterance>&, Index);                                 \
  template class Trainer<S>;                                                                                      \
  template DistillResult distill_embeddings<S>(JointModel<S>&, const Vocabulary&, const EmbeddingTable&,          \
                                               const DistillOptions&);                                            \
  template RowMatrix<S> composed_vectors<S>(const JointModel<S>&, const Vocabulary&,                          \
                                            const std::vector<std::string>&);                                  \
  template double composed_cosine<S>(const JointModel<S>&, const Vocabulary&, const EmbeddingTable&,              \
                                     std::vector<double>*);
JOINTNLU_INSTANTIATE(float)
JOINTNLU_INSTANTIATE(double)
#undef JOINTNLU_INSTANTIATE

}  // namespace jointnlu
