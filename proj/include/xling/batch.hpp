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

#include <string>
#include <vector>

#include "xling/corpus.hpp"
#include "xling/errors.hpp"
#include "xling/rng.hpp"
#include "xling/vocab.hpp"

namespace xling {

// One training mini-batch for one task. All sentence lists have the batch
// size as their common length; the optional fields are populated exactly
// for the task kinds that define them.
struct TaskBatch {
  TaskKind kind = TaskKind::kResponse;
  std::vector<TokenizedSentence> inputs;         // s^I (premise / source)
  std::vector<TokenizedSentence> responses;      // s^R (hypothesis / target)
  std::vector<TokenizedSentence> predecessors;   // s^P, quick_thought only
  std::vector<int> nli_labels;                   // nli only
  std::vector<std::vector<TokenizedSentence>> hard_negatives;  // translation only

  int size() const { return static_cast<int>(inputs.size()); }
  int negatives_per_pair() const {
    return hard_negatives.empty() ? 0 : static_cast<int>(hard_negatives[0].size());
  }
};

namespace detail {

inline std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  return order;
}

inline void require_ranking_batch_size(int k) {
  if (k < 2)
    throw ConfigError("batch size must be >= 2 for ranking tasks (in-batch negatives)");
}

}  // namespace detail

// Ranking tasks drop the final partial batch: the in-batch softmax

// normalizer depends on the batch size, and a variable final batch would
// silently change the loss scale. NLI keeps the remainder.

inline std::vector<TaskBatch> make_batches(const std::vector<ResponseExample>& examples,
                                           const Vocabulary& vocab, int k,
                                           std::uint64_t seed,
                                           int max_len = kDefaultMaxSequenceLength) {
  detail::require_ranking_batch_size(k);
  auto order = detail::shuffled_order(examples.size(), seed);
  std::vector<TaskBatch> batches;
  for (std::size_t start = 0; start + static_cast<std::size_t>(k) <= order.size();
       start += static_cast<std::size_t>(k)) {
    TaskBatch b;
    b.kind = TaskKind::kResponse;
    for (int i = 0; i < k; ++i) {
      const ResponseExample& e = examples[order[start + static_cast<std::size_t>(i)]];
      b.inputs.push_back(vocab.prepare(e.input, max_len));
      b.responses.push_back(vocab.prepare(e.response, max_len));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

inline std::vector<TaskBatch> make_batches(const std::vector<TripletExample>& examples,
                                           const Vocabulary& vocab, int k,
                                           std::uint64_t seed,
                                           int max_len = kDefaultMaxSequenceLength) {
  detail::require_ranking_batch_size(k);
  auto order = detail::shuffled_order(examples.size(), seed);
  std::vector<TaskBatch> batches;
  for (std::size_t start = 0; start + static_cast<std::size_t>(k) <= order.size();
       start += static_cast<std::size_t>(k)) {
    TaskBatch b;
    b.kind = TaskKind::kQuickThought;
    for (int i = 0; i < k; ++i) {
      const TripletExample& e = examples[order[start + static_cast<std::size_t>(i)]];
      if (e.prev.empty() && e.cur.empty() && e.next.empty())
        throw SchemaError("quick_thought: empty triplet");
      b.predecessors.push_back(vocab.prepare(e.prev, max_len));
      b.inputs.push_back(vocab.prepare(e.cur, max_len));
      b.responses.push_back(vocab.prepare(e.next, max_len));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

inline std::vector<TaskBatch> make_batches(const std::vector<NliExample>& examples,
                                           const Vocabulary& vocab, int k,
                                           std::uint64_t seed,
                                           int max_len = kDefaultMaxSequenceLength) {
  if (k < 1) throw ConfigError("batch size must be >= 1 for nli");
  auto order = detail::shuffled_order(examples.size(), seed);
  std::vector<TaskBatch> batches;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(k)) {
    TaskBatch b;
    b.kind = TaskKind::kNli;
    std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(k));
    for (std::size_t i = start; i < stop; ++i) {
      const NliExample& e = examples[order[i]];
      b.inputs.push_back(vocab.prepare(e.premise, max_len));
      b.responses.push_back(vocab.prepare(e.hypothesis, max_len));
      b.nli_labels.push_back(e.label);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

inline std::vector<TaskBatch> make_batches(const std::vector<TranslationExample>& examples,
                                           const Vocabulary& vocab, int k,
                                           std::uint64_t seed,
                                           int max_len = kDefaultMaxSequenceLength) {
  detail::require_ranking_batch_size(k);
  auto order = detail::shuffled_order(examples.size(), seed);
  std::vector<TaskBatch> batches;
  for (std::size_t start = 0; start + static_cast<std::size_t>(k) <= order.size();
       start += static_cast<std::size_t>(k)) {
    TaskBatch b;
    b.kind = TaskKind::kTranslation;
    int m = static_cast<int>(examples[order[start]].negatives.size());
    for (int i = 0; i < k; ++i) {
      const TranslationExample& e = examples[order[start + static_cast<std::size_t>(i)]];
      if (static_cast<int>(e.negatives.size()) != m)
        throw SchemaError("translation batch: ragged negatives (" +
                          std::to_string(e.negatives.size()) + " vs " + std::to_string(m) + ")");
      b.inputs.push_back(vocab.prepare(e.src, max_len));
      b.responses.push_back(vocab.prepare(e.tgt, max_len));
      std::vector<TokenizedSentence> negs;
      negs.reserve(e.negatives.size());
      for (const std::string& n : e.negatives) negs.push_back(vocab.prepare(n, max_len));
      b.hard_negatives.push_back(std::move(negs));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace xling
