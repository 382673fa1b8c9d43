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
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "xling/corpus.hpp"
#include "xling/encoder.hpp"
#include "xling/errors.hpp"
#include "xling/heads.hpp"

namespace xling {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Encode each distinct sentence once; evaluation paths reuse embeddings
// heavily (distractor pools, mining candidates).
class EmbeddingCache {
 public:
  explicit EmbeddingCache(Model& model) : model_(model) {}

  const std::vector<double>& get(const std::string& text) {
    auto it = cache_.find(text);
    if (it != cache_.end()) return it->second;
    auto [pos, inserted] = cache_.emplace(
        text, encode_to_vector(model_.encoder, model_.vocab.prepare(text)));
    return pos->second;
  }

 private:
  Model& model_;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

// For each pair, the m highest-scoring target sentences under the given
// (translation-ranking) model, excluding the true target and its exact
// string duplicates, written into the negatives field.
inline std::vector<TranslationExample> mine_hard_negatives(
    const std::vector<TranslationExample>& pairs, Model& model, int m = 5) {
  if (m < 1) throw ConfigError("mine_hard_negatives: m must be >= 1");
  if (static_cast<int>(pairs.size()) < m + 1)
    throw ConfigError("mine_hard_negatives: corpus has fewer than m+1 targets");

  EmbeddingCache cache(model);
  std::vector<const std::vector<double>*> target_emb(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    target_emb[i] = &cache.get(pairs[i].tgt);

  std::vector<TranslationExample> out = pairs;
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::vector<double>& src = cache.get(pairs[i].src);
    std::vector<double> scores(pairs.size());
    for (std::size_t j = 0; j < pairs.size(); ++j)
      scores[j] = dot(src, *target_emb[j]);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;  // deterministic tie-break
    });
    out[i].negatives.clear();
    for (std::size_t j : order) {
      if (static_cast<int>(out[i].negatives.size()) == m) break;
      if (pairs[j].tgt == pairs[i].tgt) continue;
      out[i].negatives.push_back(pairs[j].tgt);
    }
    if (static_cast<int>(out[i].negatives.size()) < m)
      throw ConfigError("mine_hard_negatives: fewer than m distinct candidate targets");
  }
  return out;
}

inline void save_translation_corpus(const std::vector<TranslationExample>& pairs,
                                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const TranslationExample& e : pairs) {
    nlohmann::json j{{"src", e.src}, {"tgt", e.tgt}};
    if (!e.negatives.empty()) j["negatives"] = e.negatives;
    out << j.dump() << "\n";
  }
}

}  // namespace xling
