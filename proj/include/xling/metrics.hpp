// Copyright 2026 The xling Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "xling/corpus.hpp"
#include "xling/errors.hpp"
#include "xling/mining.hpp"
#include "xling/rng.hpp"

namespace xling {

// -arccos of cosine similarity; range [-pi, 0], higher means more similar
inline double angular_similarity(const std::vector<double>& u,
                                 const std::vector<double>& v) {
  if (u.size() != v.size())
    throw DimensionError("angular_similarity: vector widths differ");
  double uu = dot(u, u), vv = dot(v, v);
  if (uu == 0.0 || vv == 0.0)
    throw DomainError("angular_similarity: zero vector");
  double cosine = dot(u, v) / (std::sqrt(uu) * std::sqrt(vv));
  return -std::acos(std::clamp(cosine, -1.0, 1.0));
}

// sample Pearson correlation, centered two-pass form
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw DimensionError("pearson: need two equal-length series of >= 2 points");
  double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DomainError("pearson: zero variance input");
  return sxy / std::sqrt(sxx * syy);
}

struct RetrievalConfig {
  int distractors = 999;             // K in the retrieval protocol
  std::vector<int> top_n = {1, 3, 10};
  std::uint64_t seed = 0;

  void validate() const {
    if (distractors < 1) throw ConfigError("retrieval: distractors must be >= 1");
    for (int n : top_n)
      if (n < 1 || n > distractors + 1)
        throw ConfigError("retrieval: each N must be in [1, distractors + 1]");
  }
};

struct RetrievalResult {
  std::map<int, double> p_at_n;
  long num_sources = 0;
};

struct RetrievalCandidate {
  const std::string* text;
  const std::vector<double>* embedding;
};

// Embedding-level core. Distractors are drawn per source without
// replacement from pool entries whose text differs from the true target;
// ties rank the true target last (pessimistic), so a collapsed encoder
// cannot score well by making everything equal.
inline RetrievalResult precision_at_n_core(
    const std::vector<std::vector<double>>& sources,
    const std::vector<std::string>& true_texts,
    const std::vector<std::vector<double>>& true_embeddings,
    const std::vector<RetrievalCandidate>& pool, const RetrievalConfig& cfg) {
  cfg.validate();
  if (sources.size() != true_texts.size() || sources.size() != true_embeddings.size())
    throw DimensionError("precision_at_n: source/target lists must align");
  Rng rng(cfg.seed);
  RetrievalResult result;
  result.num_sources = static_cast<long>(sources.size());
  std::map<int, long> hits;
  for (int n : cfg.top_n) hits[n] = 0;

  std::vector<int> eligible;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    eligible.clear();
    for (std::size_t j = 0; j < pool.size(); ++j)
      if (*pool[j].text != true_texts[i]) eligible.push_back(static_cast<int>(j));
    if (static_cast<int>(eligible.size()) < cfg.distractors)
      throw ConfigError("precision_at_n: pool has only " +
                        std::to_string(eligible.size()) +
                        " eligible distractors, need " + std::to_string(cfg.distractors));
    for (int d = 0; d < cfg.distractors; ++d) {
      int swap_with = d + static_cast<int>(rng.below(eligible.size() - static_cast<std::size_t>(d)));
      std::swap(eligible[static_cast<std::size_t>(d)], eligible[static_cast<std::size_t>(swap_with)]);
    }
    double true_score = dot(sources[i], true_embeddings[i]);
    long rank = 1;
    for (int d = 0; d < cfg.distractors; ++d) {
      double s = dot(sources[i], *pool[static_cast<std::size_t>(eligible[static_cast<std::size_t>(d)])].embedding);
      if (s >= true_score) ++rank;
    }
    for (int n : cfg.top_n)
      if (rank <= n) ++hits[n];
  }
  for (int n : cfg.top_n)
    result.p_at_n[n] = static_cast<double>(hits[n]) / static_cast<double>(result.num_sources);
  return result;
}

// String-level entry point: embeds pairs and the distractor pool with the
// model. An empty pool defaults to the pairs' own target sides.
inline RetrievalResult precision_at_n(Model& model,
                                      const std::vector<TranslationExample>& pairs,
                                      std::vector<std::string> pool,
                                      const RetrievalConfig& cfg) {
  cfg.validate();
  if (pool.empty())
    for (const TranslationExample& e : pairs) pool.push_back(e.tgt);
  EmbeddingCache cache(model);
  std::vector<std::vector<double>> sources, targets;
  std::vector<std::string> true_texts;
  for (const TranslationExample& e : pairs) {
    sources.push_back(cache.get(e.src));
    targets.push_back(cache.get(e.tgt));
    true_texts.push_back(e.tgt);
  }
  std::vector<RetrievalCandidate> candidates;
  candidates.reserve(pool.size());
  for (const std::string& text : pool)
    candidates.push_back({&text, &cache.get(text)});
  return precision_at_n_core(sources, true_texts, targets, candidates, cfg);
}

// Pearson r between angular-distance scores and the gold scores.
inline double sts_eval(Model& model, const std::vector<StsExample>& pairs) {
  if (pairs.size() < 2) throw ConfigError("sts_eval: need at least 2 pairs");
  EmbeddingCache cache(model);
  std::vector<double> predicted, gold;
  for (const StsExample& e : pairs) {
    predicted.push_back(angular_similarity(cache.get(e.s1), cache.get(e.s2)));
    gold.push_back(e.score);
  }
  return pearson(predicted, gold);
}

}  // namespace xling
