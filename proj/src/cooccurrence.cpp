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

#include "jointnlu/cooccurrence.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "jointnlu/json_util.hpp"

namespace jointnlu {

EmbeddingTable ppmi_svd_embeddings(const std::vector<Utterance>& corpus, const CooccurrenceOptions& options) {
  if (options.window < 1 || options.dim < 1 || options.min_count < 1) {
    throw ValidationError("co-occurrence: window, dim and min_count must be positive");
  }
  std::unordered_map<std::string, Index> counts;
  Index tokens = 0;
  for (const auto& u : corpus) {
    for (const auto& t : u.tokens) ++counts[t];
    tokens += static_cast<Index>(u.tokens.size());
  }
  EmbeddingTable table;
  for (const auto& [word, n] : counts) {
    if (n >= options.min_count) table.words.push_back(word);
  }
  std::sort(table.words.begin(), table.words.end());
  const auto n = static_cast<Index>(table.words.size());
  if (n <= options.dim) {
    throw ValidationError("co-occurrence: vocabulary of " + std::to_string(n) + " words cannot carry " +
                          std::to_string(options.dim) + " dimensions");
  }
  std::unordered_map<std::string, Index> index;
  std::vector<bool> is_context(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto& w = table.words[static_cast<std::size_t>(i)];
    index[w] = i;
    is_context[static_cast<std::size_t>(i)] =
        static_cast<double>(counts[w]) >= options.context_min_frequency * static_cast<double>(tokens);
  }

  std::unordered_map<std::uint64_t, double> pairs;
  std::vector<Index> ids;
  for (const auto& u : corpus) {
    ids.clear();
    for (const auto& t : u.tokens) {
      const auto it = index.find(t);
      ids.push_back(it == index.end() ? -1 : it->second);
    }
    const auto len = static_cast<Index>(ids.size());
    for (Index i = 0; i < len; ++i) {
      if (ids[i] < 0) continue;
      for (Index j = std::max<Index>(0, i - options.window); j <= std::min(len - 1, i + options.window); ++j) {
        if (j == i || ids[j] < 0 || !is_context[static_cast<std::size_t>(ids[j])]) continue;
        pairs[static_cast<std::uint64_t>(ids[i]) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(ids[j])] += 1.0;
      }
    }
  }

  Eigen::VectorXd row_total = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd context_total = Eigen::VectorXd::Zero(n);
  for (const auto& [key, c] : pairs) {
    row_total[static_cast<Index>(key / static_cast<std::uint64_t>(n))] += c;
    context_total[static_cast<Index>(key % static_cast<std::uint64_t>(n))] += c;
  }
  const Eigen::VectorXd smoothed = context_total.array().pow(options.context_smoothing);
  const double smoothed_total = smoothed.sum();

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(pairs.size());
  for (const auto& [key, c] : pairs) {
    const auto w = static_cast<Index>(key / static_cast<std::uint64_t>(n));
    const auto ctx = static_cast<Index>(key % static_cast<std::uint64_t>(n));
    const double pmi = std::log(c * smoothed_total / (row_total[w] * smoothed[ctx]));
    if (pmi > 0) entries.emplace_back(w, ctx, pmi);
  }
  // Triplet order follows hash iteration; sorting keeps the matrix, and with
  // it the SVD, independent of the hash table layout.
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
  });
  Eigen::SparseMatrix<double> ppmi(n, n);
  ppmi.setFromTriplets(entries.begin(), entries.end());

  // Randomized range finder with power iterations.
  const Index rank = std::min(n, options.dim + options.oversample);
  Eigen::MatrixXd probe(n, rank);
  Rng rng(derive_seed(options.seed, "svd-probe"));
  for (Index j = 0; j < rank; ++j) {
    for (Index i = 0; i < n; ++i) {
      // Box-Muller; the exact distribution matters little for a range finder.
      const double u1 = std::max(rng.uniform(), 1e-300);
      probe(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * rng.uniform());
    }
  }
  auto orthonormal = [](const Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  };
  Eigen::MatrixXd basis = orthonormal(ppmi * probe);
  for (Index q = 0; q < options.power_iterations; ++q) {
    basis = orthonormal(ppmi * orthonormal(ppmi.transpose() * basis));
  }
  const Eigen::MatrixXd projected = (ppmi.transpose() * basis).transpose();  // [rank, n]
  Eigen::BDCSVD<Eigen::MatrixXd> svd(projected, Eigen::ComputeThinU);
  const Eigen::MatrixXd left = basis * svd.matrixU().leftCols(options.dim);
  const Eigen::VectorXd sigma = svd.singularValues().head(options.dim);

  table.vectors.resize(options.dim, n);
  for (Index i = 0; i < n; ++i) {
    Eigen::VectorXd v = left.row(i).transpose().cwiseProduct(sigma);
    const double norm = v.norm();
    table.vectors.col(i) = norm > 0 ? Eigen::VectorXd(v / norm) : v;
  }
  // Orient each component by its largest entry; the SVD's signs are arbitrary.
  for (Index k = 0; k < options.dim; ++k) {
    Index pivot = 0;
    table.vectors.row(k).cwiseAbs().maxCoeff(&pivot);
    if (table.vectors(k, pivot) < 0) table.vectors.row(k) *= -1.0;
  }
  return table;
}

EmbeddingTable cooccurrence_embeddings(const CorpusGenerator& generator, const CooccurrenceOptions& options) {
  if (options.utterances < 1) throw ValidationError("co-occurrence: utterances must be positive");
  const auto corpus = generator.sample_many(options.seed, "cooccurrence", options.utterances, SuffixPool::kAll);
  return ppmi_svd_embeddings(corpus, options);
}

double cosine(const EmbeddingTable& table, Index a, Index b) {
  const auto x = table.vectors.col(a);
  const auto y = table.vectors.col(b);
  const double denom = x.norm() * y.norm();
  return denom > 0 ? x.dot(y) / denom : 0.0;
}

CooccurrenceOptions cooccurrence_options_from_json(const nlohmann::json& j) {
  StrictObject o(j, "embedding recipe");
  CooccurrenceOptions c;
  o.read("seed", c.seed);
  o.read("utterances", c.utterances);
  o.read("window", c.window);
  o.read("dim", c.dim);
  o.read("min_count", c.min_count);
  o.read("context_min_frequency", c.context_min_frequency);
  o.read("context_smoothing", c.context_smoothing);
  o.read("oversample", c.oversample);
  o.read("power_iterations", c.power_iterations);
  o.finish();
  return c;
}

}  // namespace jointnlu
