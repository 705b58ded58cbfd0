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

#include <cstdint>
#include <vector>

#include "jointnlu/generator.hpp"
#include "jointnlu/training.hpp"

namespace jointnlu {

// Count-based word vectors: positive PMI over a symmetric window, reduced by
// a randomized truncated SVD and scaled to unit rows. Serves as the target
// table for embedding distillation.
struct CooccurrenceOptions {
  std::uint64_t seed = 11;
  Index utterances = 400000;  // size of the generated co-occurrence corpus
  Index window = 2;
  Index dim = 100;
  Index min_count = 5;
  // Only words at least this frequent (share of all tokens) serve as
  // contexts. Rare contexts give large, unstable PMI values.
  double context_min_frequency = 1e-3;
  double context_smoothing = 0.75;  // exponent on context counts
  Index oversample = 10;
  Index power_iterations = 3;
};

EmbeddingTable ppmi_svd_embeddings(const std::vector<Utterance>& corpus, const CooccurrenceOptions& options);

// Draws options.utterances utterances with every suffix allowed, from a
// stream independent of the train/dev/test splits, then embeds them.
EmbeddingTable cooccurrence_embeddings(const CorpusGenerator& generator, const CooccurrenceOptions& options);

double cosine(const EmbeddingTable& table, Index a, Index b);

// Strict reader for a recipe file; absent keys keep their defaults.
CooccurrenceOptions cooccurrence_options_from_json(const nlohmann::json& j);

}  // namespace jointnlu
