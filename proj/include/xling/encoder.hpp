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

#include <cmath>
#include <string>
#include <vector>

#include "xling/errors.hpp"
#include "xling/graph.hpp"
#include "xling/rng.hpp"
#include "xling/tensor.hpp"
#include "xling/vocab.hpp"

namespace xling {

// Encoder hyperparameters. The paper-scale profile is constructible and
// shape-safe; the desk profile is what the tests and the synthetic-corpus
// experiments actually run.
struct EncoderConfig {
  int word_dim = 64;
  int char_dim = 64;
  int model_dim = 64;
  int num_layers = 2;
  int num_heads = 4;
  int filter_dim = 128;
  int max_len = kDefaultMaxSequenceLength;

  static EncoderConfig desk() { return EncoderConfig{}; }

  static EncoderConfig paper() {
    EncoderConfig c;
    c.word_dim = 320;
    c.char_dim = 320;
    c.model_dim = 512;
    c.num_layers = 3;
    c.num_heads = 8;
    c.filter_dim = 2048;
    return c;
  }

  void validate() const {
    if (word_dim <= 0 || char_dim <= 0 || model_dim <= 0 || filter_dim <= 0 ||
        num_layers <= 0 || num_heads <= 0 || max_len < 1)
      throw ConfigError("encoder config: all dimensions must be positive");
    if (model_dim % num_heads != 0)
      throw ConfigError("encoder config: model_dim must be divisible by num_heads");
    if (word_dim != char_dim)
      throw ConfigError("encoder config: word_dim and char_dim must match (they are averaged)");
  }

  int head_dim() const { return model_dim / num_heads; }
  // task-head layer sizes keep the paper's 320:512 ratio against model_dim
  int head_hidden_dim() const { return std::max(1, model_dim * 320 / 512); }
  int nli_hidden_dim() const { return model_dim; }
  bool needs_input_projection() const { return word_dim != model_dim; }
};

struct NamedParam {
  std::string name;
  Tensor* tensor;
  bool is_embedding;  // word/char tables, targeted by the gradient multiplier
};

// All weights of the shared encoder g.
struct EncoderParams {
  EncoderConfig config;
  Tensor word_table;   // [V+B x word_dim]
  Tensor ngram_table;  // [C x char_dim]
  Tensor char_ff_w;    // [char_dim x char_dim]
  Tensor char_ff_b;    // [char_dim]
  Tensor input_proj_w;  // [word_dim x model_dim], present iff dims differ

  struct Layer {
    std::vector<Tensor> wq, wk, wv;  // per head: [model_dim x head_dim]
    Tensor wo;                       // [model_dim x model_dim]
    Tensor ff1_w, ff1_b, ff2_w, ff2_b;
    Tensor ln1_g, ln1_b, ln2_g, ln2_b;
  };
  std::vector<Layer> layers;

  std::vector<NamedParam> named() {
    std::vector<NamedParam> out;
    out.push_back({"encoder.word_table", &word_table, true});
    out.push_back({"encoder.ngram_table", &ngram_table, true});
    out.push_back({"encoder.char_ff.w", &char_ff_w, false});
    out.push_back({"encoder.char_ff.b", &char_ff_b, false});
    if (config.needs_input_projection())
      out.push_back({"encoder.input_proj.w", &input_proj_w, false});
    for (std::size_t l = 0; l < layers.size(); ++l) {
      std::string p = "encoder.layers." + std::to_string(l) + ".";
      Layer& layer = layers[l];
      for (std::size_t h = 0; h < layer.wq.size(); ++h) {
        std::string hp = p + "attn.heads." + std::to_string(h) + ".";
        out.push_back({hp + "wq", &layer.wq[h], false});
        out.push_back({hp + "wk", &layer.wk[h], false});
        out.push_back({hp + "wv", &layer.wv[h], false});
      }
      out.push_back({p + "attn.wo", &layer.wo, false});
      out.push_back({p + "ff1.w", &layer.ff1_w, false});
      out.push_back({p + "ff1.b", &layer.ff1_b, false});
      out.push_back({p + "ff2.w", &layer.ff2_w, false});
      out.push_back({p + "ff2.b", &layer.ff2_b, false});
      out.push_back({p + "ln1.g", &layer.ln1_g, false});
      out.push_back({p + "ln1.b", &layer.ln1_b, false});
      out.push_back({p + "ln2.g", &layer.ln2_g, false});
      out.push_back({p + "ln2.b", &layer.ln2_b, false});
    }
    return out;
  }
};

namespace detail {

inline Tensor init_matrix(int rows, int cols, Rng& rng, double stddev) {
  Tensor t({rows, cols});
  for (double& v : t.values) v = rng.truncated_normal(stddev);
  t.requires_grad = true;
  return t;
}

inline Tensor init_fan_in(int rows, int cols, Rng& rng) {
  return init_matrix(rows, cols, rng, 1.0 / std::sqrt(static_cast<double>(rows)));
}

inline Tensor init_vector(int n, double fill, bool requires_grad = true) {
  Tensor t({n});
  std::fill(t.values.begin(), t.values.end(), fill);
  t.requires_grad = requires_grad;
  return t;
}

}  // namespace detail

// Embeddings: truncated normal, std 0.1. Projections: fan-in scaled normal.
// The draw order is the registry order, so a seed pins every weight.
inline EncoderParams init_encoder(const EncoderConfig& config, int word_rows,
                                  int ngram_rows, Rng& rng) {
  config.validate();
  EncoderParams p;
  p.config = config;
  p.word_table = detail::init_matrix(word_rows, config.word_dim, rng, 0.1);
  p.ngram_table = detail::init_matrix(ngram_rows, config.char_dim, rng, 0.1);
  p.char_ff_w = detail::init_fan_in(config.char_dim, config.char_dim, rng);
  p.char_ff_b = detail::init_vector(config.char_dim, 0.0);
  if (config.needs_input_projection())
    p.input_proj_w = detail::init_fan_in(config.word_dim, config.model_dim, rng);
  p.layers.resize(static_cast<std::size_t>(config.num_layers));
  for (auto& layer : p.layers) {
    for (int h = 0; h < config.num_heads; ++h) {
      layer.wq.push_back(detail::init_fan_in(config.model_dim, config.head_dim(), rng));
      layer.wk.push_back(detail::init_fan_in(config.model_dim, config.head_dim(), rng));
      layer.wv.push_back(detail::init_fan_in(config.model_dim, config.head_dim(), rng));
    }
    layer.wo = detail::init_fan_in(config.model_dim, config.model_dim, rng);
    layer.ff1_w = detail::init_fan_in(config.model_dim, config.filter_dim, rng);
    layer.ff1_b = detail::init_vector(config.filter_dim, 0.0);
    layer.ff2_w = detail::init_fan_in(config.filter_dim, config.model_dim, rng);
    layer.ff2_b = detail::init_vector(config.model_dim, 0.0);
    layer.ln1_g = detail::init_vector(config.model_dim, 1.0);
    layer.ln1_b = detail::init_vector(config.model_dim, 0.0);
    layer.ln2_g = detail::init_vector(config.model_dim, 1.0);
    layer.ln2_b = detail::init_vector(config.model_dim, 0.0);
  }
  return p;
}

// Standard sinusoidal position encodings. Without them a mean-pooled
// self-attention encoder is order-invariant, which would make quick-thought
// and response ranking collapse; they are constants, not parameters.
inline Tensor position_encoding(int len, int dim) {
  Tensor pe({len, dim});
  for (int pos = 0; pos < len; ++pos)
    for (int i = 0; i < dim; ++i) {
      double exponent = static_cast<double>(2 * (i / 2)) / dim;
      double angle = pos / std::pow(10000.0, exponent);
      pe.at(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

// word vector w, char vector c = tanh(FF(sum of n-gram vectors)),
// token input (w + c) / 2, projected to model width when they differ
inline Value embed_tokens(Graph& g, EncoderParams& p, const TokenizedSentence& sent) {
  const TokenizedSentence* s = &sent;
  if (s->empty())
    throw StateError("embed_tokens: empty sentence; prepare() substitutes <empty>");
  Value words = g.embedding_rows(g.leaf(p.word_table), s->word_ids);
  Value gram_sum = g.ngram_sum_rows(g.leaf(p.ngram_table), s->ngram_ids);
  Value chars = g.tanh(g.add_row_bias(g.matmul(gram_sum, g.leaf(p.char_ff_w)),
                                      g.leaf(p.char_ff_b)));
  Value tokens = g.scale(g.add(words, chars), 0.5);
  if (p.config.needs_input_projection())
    tokens = g.matmul(tokens, g.leaf(p.input_proj_w));
  return tokens;
}

// num_layers blocks of post-norm multi-head self-attention plus a
// position-wise ReLU feedforward, with sinusoidal positions added up front.
// `attention_out`, when given, collects each block's softmaxed attention
// matrices (num_layers * num_heads of them, in order).
inline Value transformer_stack(Graph& g, EncoderParams& p, Value x,
                               std::vector<Value>* attention_out = nullptr) {
  const EncoderConfig& cfg = p.config;
  int len = g.value(x).rows();
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
  x = g.add(x, g.input(position_encoding(len, cfg.model_dim)));
  for (auto& layer : p.layers) {
    std::vector<Value> ctx;
    for (std::size_t h = 0; h < layer.wq.size(); ++h) {
      Value q = g.matmul(x, g.leaf(layer.wq[h]));
      Value k = g.matmul(x, g.leaf(layer.wk[h]));
      Value v = g.matmul(x, g.leaf(layer.wv[h]));
      Value attn = g.row_softmax(g.scale(g.matmul(q, g.transpose(k)), inv_sqrt_d));
      if (attention_out) attention_out->push_back(attn);
      ctx.push_back(g.matmul(attn, v));
    }
    Value merged = g.matmul(g.concat_cols(ctx), g.leaf(layer.wo));
    x = g.layer_norm(g.add(x, merged), g.leaf(layer.ln1_g), g.leaf(layer.ln1_b));
    Value hidden = g.relu(g.add_row_bias(g.matmul(x, g.leaf(layer.ff1_w)),
                                         g.leaf(layer.ff1_b)));
    Value ff = g.add_row_bias(g.matmul(hidden, g.leaf(layer.ff2_w)),
                              g.leaf(layer.ff2_b));
    x = g.layer_norm(g.add(x, ff), g.leaf(layer.ln2_g), g.leaf(layer.ln2_b));
  }
  return x;
}

// sentence embedding: mean over final-layer positions, rank-1 [model_dim]
inline Value encode(Graph& g, EncoderParams& p, const TokenizedSentence& sent) {
  return g.reduce_mean(transformer_stack(g, p, embed_tokens(g, p, sent)), 0);
}

// forward-only convenience for evaluation paths
inline std::vector<double> encode_to_vector(EncoderParams& p,
                                            const TokenizedSentence& sent) {
  Graph g;
  return g.value(encode(g, p, sent)).values;
}

}  // namespace xling
