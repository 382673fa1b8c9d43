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

#include "xling/encoder.hpp"
#include "xling/graph.hpp"
#include "xling/rng.hpp"

namespace xling {

// Two fully-connected layers with tanh, the task-head shape used by the
// response and quick-thought objectives (model_dim -> hidden -> model_dim).
struct FeedForwardHead {
  Tensor w1, b1, w2, b2;

  // input: rank-1 [d] or rank-2 [n x d]
  Value apply(Graph& g, Value x) {
    bool vec = g.value(x).rank() == 1;
    if (vec) x = g.concat_rows({x});
    Value h = g.tanh(g.add_row_bias(g.matmul(x, g.leaf(w1)), g.leaf(b1)));
    Value out = g.tanh(g.add_row_bias(g.matmul(h, g.leaf(w2)), g.leaf(b2)));
    return vec ? g.reduce_mean(out, 0) : out;  // single row back to rank 1
  }
};

// Per-task projection weights. The translation task deliberately owns
// nothing here (bare g on both sides aligns the two languages), and the
// response task's input side is bare g as well.
struct TaskHeadParams {
  FeedForwardHead response_head;  // response side only
  FeedForwardHead qt_prev_head, qt_input_head, qt_next_head;
  Tensor nli_hidden_w, nli_hidden_b;  // [4*model_dim x nli_hidden]
  Tensor nli_out_w, nli_out_b;        // [nli_hidden x 3]

  std::vector<NamedParam> named() {
    std::vector<NamedParam> out;
    auto add_head = [&](const std::string& prefix, FeedForwardHead& h) {
      out.push_back({prefix + ".w1", &h.w1, false});
      out.push_back({prefix + ".b1", &h.b1, false});
      out.push_back({prefix + ".w2", &h.w2, false});
      out.push_back({prefix + ".b2", &h.b2, false});
    };
    add_head("heads.response", response_head);
    add_head("heads.qt_prev", qt_prev_head);
    add_head("heads.qt_input", qt_input_head);
    add_head("heads.qt_next", qt_next_head);
    out.push_back({"heads.nli_hidden.w", &nli_hidden_w, false});
    out.push_back({"heads.nli_hidden.b", &nli_hidden_b, false});
    out.push_back({"heads.nli_out.w", &nli_out_w, false});
    out.push_back({"heads.nli_out.b", &nli_out_b, false});
    return out;
  }
};

inline FeedForwardHead init_head(int in_dim, int hidden, int out_dim, Rng& rng) {
  FeedForwardHead h;
  h.w1 = detail::init_fan_in(in_dim, hidden, rng);
  h.b1 = detail::init_vector(hidden, 0.0);
  h.w2 = detail::init_fan_in(hidden, out_dim, rng);
  h.b2 = detail::init_vector(out_dim, 0.0);
  return h;
}

inline TaskHeadParams init_heads(const EncoderConfig& cfg, Rng& rng) {
  TaskHeadParams p;
  int d = cfg.model_dim;
  int hidden = cfg.head_hidden_dim();
  p.response_head = init_head(d, hidden, d, rng);
  p.qt_prev_head = init_head(d, hidden, d, rng);
  p.qt_input_head = init_head(d, hidden, d, rng);
  p.qt_next_head = init_head(d, hidden, d, rng);
  p.nli_hidden_w = detail::init_fan_in(4 * d, cfg.nli_hidden_dim(), rng);
  p.nli_hidden_b = detail::init_vector(cfg.nli_hidden_dim(), 0.0);
  p.nli_out_w = detail::init_fan_in(cfg.nli_hidden_dim(), 3, rng);
  p.nli_out_b = detail::init_vector(3, 0.0);
  return p;
}

// The full trainable parameter set: shared encoder plus task heads.
struct Model {
  Vocabulary vocab;
  EncoderParams encoder;
  TaskHeadParams heads;

  std::vector<NamedParam> named() {
    std::vector<NamedParam> out = encoder.named();
    for (NamedParam& p : heads.named()) out.push_back(p);
    return out;
  }
};

inline Model init_model(const EncoderConfig& cfg, Vocabulary vocab,
                        std::uint64_t seed) {
  Rng rng(seed);
  Model m;
  m.encoder = init_encoder(cfg, vocab.word_id_space(), vocab.ngram_buckets(), rng);
  m.heads = init_heads(cfg, rng);
  m.vocab = std::move(vocab);
  return m;
}

}  // namespace xling
