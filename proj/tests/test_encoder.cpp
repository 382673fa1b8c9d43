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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "grad_check.hpp"
#include "xling/encoder.hpp"
#include "xling/heads.hpp"
#include "xling/losses.hpp"

using namespace xling;

namespace {

// tiny configuration used for gradient checks
EncoderConfig tiny_config() {
  EncoderConfig c;
  c.word_dim = c.char_dim = c.model_dim = 8;
  c.num_layers = 1;
  c.num_heads = 2;
  c.filter_dim = 12;
  return c;
}

Vocabulary tiny_vocab() {
  return Vocabulary({"alpha", "beta", "gamma", "delta", "eps"}, 5, 40, {3, 4});
}

}  // namespace

TEST_CASE("encoder config validation") {
  EncoderConfig paper = EncoderConfig::paper();
  paper.validate();
  CHECK(paper.head_dim() == 64);
  CHECK(paper.head_hidden_dim() == 320);
  CHECK(paper.needs_input_projection());

  EncoderConfig desk = EncoderConfig::desk();
  desk.validate();
  CHECK(desk.head_hidden_dim() == 40);
  CHECK_FALSE(desk.needs_input_projection());

  EncoderConfig bad = desk;
  bad.num_heads = 5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = desk;
  bad.char_dim = 32;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("paper-scale parameters are shape-consistent") {
  Rng rng(5);
  Vocabulary v = tiny_vocab();
  EncoderParams p = init_encoder(EncoderConfig::paper(), v.word_id_space(),
                                 v.ngram_buckets(), rng);
  Graph g;
  Value emb = encode(g, p, v.prepare("alpha beta"));
  CHECK(g.value(emb).shape == std::vector<int>{512});
}

TEST_CASE("embed_tokens zero char path") {
  Rng rng(9);
  Vocabulary v = tiny_vocab();
  EncoderParams p = init_encoder(tiny_config(), v.word_id_space(), v.ngram_buckets(), rng);
  // zero n-gram table and zero char bias make c = tanh(0 * W + 0) = 0,
  // so the token input is w / 2
  std::fill(p.ngram_table.values.begin(), p.ngram_table.values.end(), 0.0);
  std::fill(p.char_ff_b.values.begin(), p.char_ff_b.values.end(), 0.0);
  TokenizedSentence s = v.prepare("alpha");
  Graph g;
  const Tensor& x = g.value(embed_tokens(g, p, s));
  REQUIRE(x.shape == std::vector<int>{1, 8});
  for (int j = 0; j < 8; ++j)
    CHECK(x.at(0, j) == 0.5 * p.word_table.at(s.word_ids[0], j));
}

TEST_CASE("ngram order does not change the char vector") {
  Rng rng(10);
  Vocabulary v = tiny_vocab();
  EncoderParams p = init_encoder(tiny_config(), v.word_id_space(), v.ngram_buckets(), rng);
  TokenizedSentence s = v.prepare("unseen");
  TokenizedSentence permuted = s;
  std::reverse(permuted.ngram_ids[0].begin(), permuted.ngram_ids[0].end());
  Graph g1, g2;
  CHECK(g1.value(embed_tokens(g1, p, s)).values ==
        g2.value(embed_tokens(g2, p, permuted)).values);
}

TEST_CASE("transformer stack shape contract and attention normalization") {
  Rng rng(11);
  Vocabulary v = tiny_vocab();
  EncoderConfig cfg = tiny_config();
  EncoderParams p = init_encoder(cfg, v.word_id_space(), v.ngram_buckets(), rng);
  for (int len : {1, 5, 64}) {
    std::string text;
    for (int i = 0; i < len; ++i) text += "alpha ";
    TokenizedSentence s = v.prepare(text);
    REQUIRE(static_cast<int>(s.length()) == len);
    Graph g;
    std::vector<Value> attn;
    Value out = transformer_stack(g, p, embed_tokens(g, p, s), &attn);
    CHECK(g.value(out).shape == std::vector<int>{len, cfg.model_dim});
    REQUIRE(attn.size() == static_cast<std::size_t>(cfg.num_layers * cfg.num_heads));
    for (Value a : attn) {
      const Tensor& t = g.value(a);
      for (int i = 0; i < t.rows(); ++i) {
        double row = 0.0;
        for (int j = 0; j < t.cols(); ++j) row += t.at(i, j);
        CHECK_THAT(row, Catch::Matchers::WithinAbs(1.0, 1e-10));
      }
    }
  }
}

TEST_CASE("encode basics") {
  Rng rng(12);
  Vocabulary v = tiny_vocab();
  EncoderParams p = init_encoder(tiny_config(), v.word_id_space(), v.ngram_buckets(), rng);

  // a single-token sentence embeds as that position's final-layer vector
  TokenizedSentence one = v.prepare("gamma");
  Graph g;
  const Tensor& stack = g.value(transformer_stack(g, p, embed_tokens(g, p, one)));
  const Tensor& emb = g.value(encode(g, p, one));
  REQUIRE(emb.shape == std::vector<int>{8});
  for (int j = 0; j < 8; ++j) CHECK(emb.values[static_cast<std::size_t>(j)] == stack.at(0, j));

  // bit-identical embeddings for repeated calls
  CHECK(encode_to_vector(p, v.prepare("alpha beta gamma")) ==
        encode_to_vector(p, v.prepare("alpha beta gamma")));

  // empty text goes through the <empty> token
  std::vector<double> e = encode_to_vector(p, v.prepare(""));
  CHECK(e.size() == 8);
}

TEST_CASE("random-init embeddings are finite and nonzero") {
  Rng rng(13);
  Vocabulary v = tiny_vocab();
  EncoderParams p = init_encoder(tiny_config(), v.word_id_space(), v.ngram_buckets(), rng);
  const char* words[] = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "koko"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::string text;
    int len = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < len; ++i)
      text += std::string(words[rng.below(7)]) + " ";
    std::vector<double> e = encode_to_vector(p, v.prepare(text));
    double norm = 0.0;
    bool finite = true;
    for (double x : e) {
      finite = finite && std::isfinite(x);
      norm += x * x;
    }
    REQUIRE(finite);
    REQUIRE(norm > 0.0);
  }
}

TEST_CASE("word table gradient matches finite differences") {
  Rng rng(14);
  Vocabulary v = tiny_vocab();
  EncoderParams p = init_encoder(tiny_config(), v.word_id_space(), v.ngram_buckets(), rng);
  TokenizedSentence s = v.prepare("alpha beta");

  auto loss_fn = [&](const std::vector<Tensor*>&) {
    Graph g;
    return g.scalar_value(g.reduce_sum(g.tanh(encode(g, p, s)), 0));
  };
  {
    Graph g;
    g.backward(g.reduce_sum(g.tanh(encode(g, p, s)), 0));
  }
  double err = xling::test::max_grad_rel_error(loss_fn, {&p.word_table});
  CHECK(err < 1e-4);
  for (NamedParam& np : p.named()) np.tensor->zero_grad();
}

TEST_CASE("full encoder gradient check on toy model") {
  Rng rng(15);
  Vocabulary v = tiny_vocab();
  EncoderParams p = init_encoder(tiny_config(), v.word_id_space(), v.ngram_buckets(), rng);
  TokenizedSentence s = v.prepare("alpha beta");  // 2 tokens, dim 8

  auto loss_fn = [&](const std::vector<Tensor*>&) {
    Graph g;
    return g.scalar_value(g.reduce_sum(g.tanh(encode(g, p, s)), 0));
  };
  {
    Graph g;
    g.backward(g.reduce_sum(g.tanh(encode(g, p, s)), 0));
  }
  std::vector<Tensor*> leaves;
  for (NamedParam& np : p.named()) leaves.push_back(np.tensor);
  double err = xling::test::max_grad_rel_error(loss_fn, leaves);
  CHECK(err < 1e-4);
  for (Tensor* t : leaves) t->zero_grad();
}

TEST_CASE("token order matters after a training step") {
  Rng rng(16);
  Vocabulary v = tiny_vocab();
  Model m = init_model(tiny_config(), v, 16);

  TaskBatch batch;
  batch.kind = TaskKind::kTranslation;
  batch.inputs = {m.vocab.prepare("alpha beta"), m.vocab.prepare("gamma delta")};
  batch.responses = {m.vocab.prepare("delta eps"), m.vocab.prepare("eps alpha")};
  batch.hard_negatives = {{}, {}};
  {
    Graph g;
    Value loss = translation_loss(g, m, batch);
    g.backward(loss);
  }
  for (NamedParam& np : m.named())
    if (!np.tensor->grad.empty())
      for (std::size_t i = 0; i < np.tensor->values.size(); ++i)
        np.tensor->values[i] -= 0.01 * np.tensor->grad[i];

  auto ab = encode_to_vector(m.encoder, m.vocab.prepare("alpha beta"));
  auto ba = encode_to_vector(m.encoder, m.vocab.prepare("beta alpha"));
  CHECK(ab != ba);
}
