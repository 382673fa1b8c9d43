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

#include "xling/batch.hpp"
#include "xling/encoder.hpp"
#include "xling/graph.hpp"
#include "xling/heads.hpp"

namespace xling {

// Whether translation hard negatives join one shared candidate pool that
// every row scores against (the in-batch softmax generalized to K + K*m
// candidates) or only their own row's denominator.
enum class NegativeScope { kPooled, kPerRow };

// In-batch softmax ranking loss: scores[i][j] = inputs[i] . candidates[j],
// mean over rows of -log softmax(scores[i])[positive[i]]. The task losses
// below all reduce to this once their projections are applied, which is
// also the seam the engineered-embedding tests drive directly.
inline Value ranking_cross_entropy(Graph& g, const std::vector<Value>& inputs,
                                   const std::vector<Value>& candidates,
                                   std::vector<int> positive) {
  if (inputs.size() != positive.size())
    throw DimensionError("ranking_cross_entropy: one positive index per input row");
  Value input_matrix = g.concat_rows(inputs);
  Value candidate_matrix = g.concat_rows(candidates);
  Value scores = g.matmul(input_matrix, g.transpose(candidate_matrix));
  return g.softmax_cross_entropy(scores, std::move(positive));
}

inline std::vector<Value> encode_all(Graph& g, EncoderParams& enc,
                                     const std::vector<TokenizedSentence>& sents) {
  std::vector<Value> out;
  out.reserve(sents.size());
  for (const TokenizedSentence& s : sents) out.push_back(encode(g, enc, s));
  return out;
}

namespace detail {

inline void require_batch(const TaskBatch& batch, TaskKind kind, int min_size) {
  if (batch.kind != kind)
    throw ConfigError(std::string("loss: batch kind is ") + task_kind_name(batch.kind) +
                      ", expected " + task_kind_name(kind));
  if (batch.size() < min_size)
    throw ConfigError(std::string("loss: ") + task_kind_name(kind) + " needs batch size >= " +
                      std::to_string(min_size) + ", got " + std::to_string(batch.size()));
}

inline std::vector<int> iota_targets(int k) {
  std::vector<int> t(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) t[static_cast<std::size_t>(i)] = i;
  return t;
}

}  // namespace detail

// Conversational response prediction: inputs are encoded by bare g, the
// response side gets the response head, diagonal positives.
inline Value response_loss(Graph& g, Model& m, const TaskBatch& batch) {
  detail::require_batch(batch, TaskKind::kResponse, 2);
  std::vector<Value> inputs = encode_all(g, m.encoder, batch.inputs);
  std::vector<Value> responses = encode_all(g, m.encoder, batch.responses);
  for (Value& r : responses) r = m.heads.response_head.apply(g, r);
  return ranking_cross_entropy(g, inputs, responses, detail::iota_targets(batch.size()));
}

// Quick thought: rank the true successor and the true predecessor, each
// through its own projection; the two cross entropies are summed.
inline Value quick_thought_loss(Graph& g, Model& m, const TaskBatch& batch) {
  detail::require_batch(batch, TaskKind::kQuickThought, 2);
  if (batch.predecessors.size() != batch.inputs.size())
    throw SchemaError("quick_thought_loss: predecessor sentences missing");
  std::vector<Value> cur = encode_all(g, m.encoder, batch.inputs);
  std::vector<Value> next = encode_all(g, m.encoder, batch.responses);
  std::vector<Value> prev = encode_all(g, m.encoder, batch.predecessors);
  for (Value& v : cur) v = m.heads.qt_input_head.apply(g, v);
  for (Value& v : next) v = m.heads.qt_next_head.apply(g, v);
  for (Value& v : prev) v = m.heads.qt_prev_head.apply(g, v);
  auto targets = detail::iota_targets(batch.size());
  Value next_ce = ranking_cross_entropy(g, cur, next, targets);
  Value prev_ce = ranking_cross_entropy(g, cur, prev, targets);
  return g.add(next_ce, prev_ce);
}

// (u1, u2, |u1 - u2|, u1 * u2), in exactly that order
inline Value nli_feature(Graph& g, Value u1, Value u2) {
  const Tensor& t1 = g.value(u1);
  const Tensor& t2 = g.value(u2);
  if (t1.rank() != 1 || t2.rank() != 1 || t1.shape != t2.shape)
    throw DimensionError("nli_feature: need two equal-width vectors");
  return g.concat_cols({u1, u2, g.abs(g.sub(u1, u2)), g.mul(u1, u2)});
}

inline Value nli_logits(Graph& g, Model& m, Value features) {
  Value hidden = g.tanh(g.add_row_bias(g.matmul(features, g.leaf(m.heads.nli_hidden_w)),
                                       g.leaf(m.heads.nli_hidden_b)));
  return g.add_row_bias(g.matmul(hidden, g.leaf(m.heads.nli_out_w)),
                        g.leaf(m.heads.nli_out_b));
}

// 3-way classification over the relation feature vector
inline Value nli_loss(Graph& g, Model& m, const TaskBatch& batch) {
  detail::require_batch(batch, TaskKind::kNli, 1);
  if (batch.nli_labels.size() != batch.inputs.size())
    throw SchemaError("nli_loss: labels missing");
  std::vector<Value> rows;
  rows.reserve(batch.inputs.size());
  for (int i = 0; i < batch.size(); ++i) {
    Value u1 = encode(g, m.encoder, batch.inputs[static_cast<std::size_t>(i)]);
    Value u2 = encode(g, m.encoder, batch.responses[static_cast<std::size_t>(i)]);
    rows.push_back(nli_feature(g, u1, u2));
  }
  Value logits = nli_logits(g, m, g.concat_rows(rows));
  return g.softmax_cross_entropy(logits, batch.nli_labels);
}

// Translation ranking: bare g on both sides. With the pooled scope every
// row scores against all K in-batch targets plus all K*m hard negatives;
// with the per-row scope only a row's own m negatives join its denominator.
inline Value translation_loss(Graph& g, Model& m, const TaskBatch& batch,
                              NegativeScope scope = NegativeScope::kPooled) {
  detail::require_batch(batch, TaskKind::kTranslation, 2);
  int k = batch.size();
  int num_neg = batch.negatives_per_pair();
  for (const auto& negs : batch.hard_negatives)
    if (static_cast<int>(negs.size()) != num_neg)
      throw SchemaError("translation_loss: ragged negatives");

  std::vector<Value> sources = encode_all(g, m.encoder, batch.inputs);
  std::vector<Value> targets = encode_all(g, m.encoder, batch.responses);
  if (num_neg == 0 || scope == NegativeScope::kPooled) {
    std::vector<Value> candidates = targets;
    for (const auto& negs : batch.hard_negatives)
      for (const TokenizedSentence& n : negs)
        candidates.push_back(encode(g, m.encoder, n));
    return ranking_cross_entropy(g, sources, candidates, detail::iota_targets(k));
  }

  // per-row scope: row i sees the K in-batch targets then its own negatives
  Value target_matrix = g.concat_rows(targets);
  std::vector<Value> score_rows;
  score_rows.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    Value src_row = g.concat_rows({sources[static_cast<std::size_t>(i)]});
    Value in_batch = g.matmul(src_row, g.transpose(target_matrix));
    std::vector<Value> negs;
    for (const TokenizedSentence& n : batch.hard_negatives[static_cast<std::size_t>(i)])
      negs.push_back(encode(g, m.encoder, n));
    Value neg_scores = g.matmul(src_row, g.transpose(g.concat_rows(negs)));
    score_rows.push_back(g.concat_cols({in_batch, neg_scores}));
  }
  return g.softmax_cross_entropy(g.concat_rows(score_rows), detail::iota_targets(k));
}

// Dispatch on the batch's task kind.
inline Value task_loss(Graph& g, Model& m, const TaskBatch& batch,
                       NegativeScope scope = NegativeScope::kPooled) {
  switch (batch.kind) {
    case TaskKind::kResponse: return response_loss(g, m, batch);
    case TaskKind::kQuickThought: return quick_thought_loss(g, m, batch);
    case TaskKind::kNli: return nli_loss(g, m, batch);
    case TaskKind::kTranslation: return translation_loss(g, m, batch, scope);
  }
  throw StateError("task_loss: bad kind");
}

}  // namespace xling
