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
#include <numbers>

#include "eigen_oracle.hpp"
#include "xling/metrics.hpp"
#include "xling/spectral.hpp"
#include "xling/transfer.hpp"

using namespace xling;

namespace {

std::vector<double> rand_vec(int n, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.normal();
  return v;
}

// brute-force oracle: rank the true target by sorting, distractors winning
// ties, over an exhaustive candidate set
double p_at_n_oracle(const std::vector<std::vector<double>>& src,
                     const std::vector<std::vector<double>>& tgt,
                     const std::vector<std::vector<double>>& distractors_per_source
                         [[maybe_unused]],
                     const std::vector<std::vector<std::vector<double>>>& cand_sets,
                     int n) {
  long hits = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    std::vector<std::pair<double, int>> scored;  // (score, is_true)
    scored.emplace_back(dot(src[i], tgt[i]), 1);
    for (const auto& c : cand_sets[i]) scored.emplace_back(dot(src[i], c), 0);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;  // distractors before the true target on ties
    });
    for (std::size_t r = 0; r < scored.size(); ++r)
      if (scored[r].second == 1 && static_cast<int>(r) < n) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(src.size());
}

// textbook single-pass oracle, a different arrangement than the library's
// centered two-pass implementation
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) /
         std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

}  // namespace

TEST_CASE("angular similarity values and properties") {
  std::vector<double> u{1.0, 2.0, -0.5};
  CHECK_THAT(angular_similarity(u, u), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(angular_similarity({1, 0}, {0, 1}),
             Catch::Matchers::WithinAbs(-std::numbers::pi / 2, 1e-12));
  // cos = 0.5
  CHECK_THAT(angular_similarity({1, 0}, {0.5, std::sqrt(3.0) / 2}),
             Catch::Matchers::WithinAbs(-std::numbers::pi / 3, 1e-12));
  CHECK_THROWS_AS(angular_similarity({0, 0}, {1, 1}), DomainError);

  // symmetry and positive-scale invariance
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a = rand_vec(6, rng), b = rand_vec(6, rng);
    double f = angular_similarity(a, b);
    CHECK_THAT(angular_similarity(b, a), Catch::Matchers::WithinAbs(f, 1e-12));
    std::vector<double> a2 = a, b2 = b;
    double ca = 0.5 + rng.uniform01() * 4.0, cb = 0.5 + rng.uniform01() * 4.0;
    for (double& x : a2) x *= ca;
    for (double& x : b2) x *= cb;
    CHECK_THAT(angular_similarity(a2, b2), Catch::Matchers::WithinAbs(f, 1e-12));
  }
}

TEST_CASE("pearson values and properties") {
  std::vector<double> xs{1, 2, 3};
  CHECK_THAT(pearson(xs, {3, 5, 7}), Catch::Matchers::WithinAbs(1.0, 1e-12));   // 2x+1
  CHECK_THAT(pearson(xs, {-1, -2, -3}), Catch::Matchers::WithinAbs(-1.0, 1e-12));
  CHECK_THAT(pearson(xs, {1, 2, 4}),
             Catch::Matchers::WithinAbs(0.9819805060619659, 1e-9));
  CHECK_THROWS_AS(pearson(xs, {1, 1, 1}), DomainError);
  CHECK_THROWS_AS(pearson({1}, {2}), DimensionError);

  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 3 + static_cast<int>(rng.below(40));
    std::vector<double> x = rand_vec(n, rng), y = rand_vec(n, rng);
    double lib = pearson(x, y);
    CHECK_THAT(lib, Catch::Matchers::WithinAbs(pearson_oracle(x, y), 1e-9));
    // invariance under positive affine transforms
    std::vector<double> x2 = x;
    for (double& v : x2) v = 2.5 * v + 7.0;
    CHECK_THAT(pearson(x2, y), Catch::Matchers::WithinAbs(lib, 1e-9));
  }
}

TEST_CASE("precision_at_n oracle cases") {
  // engineered embeddings with known ranks {1, 2, 4, 11}
  // candidates are unit axes; source i prefers axis i with margin by rank
  int dim = 16;
  auto axis = [&](int i, double scale) {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    v[static_cast<std::size_t>(i)] = scale;
    return v;
  };
  std::vector<std::vector<double>> sources, trues;
  std::vector<std::string> true_texts;
  std::vector<std::string> pool_texts;
  std::vector<std::vector<double>> pool_embs;
  // pool: 11 distractors d0..d10 with embeddings axis(j, 1.0), j = 0..10
  for (int j = 0; j < 11; ++j) {
    pool_texts.push_back("d" + std::to_string(j));
    pool_embs.push_back(axis(j, 1.0));
  }
  // true target embedding axis(15, 1); source scores distractors via axis
  // weights so that exactly rank-1 distractors beat it
  std::vector<int> ranks{1, 2, 4, 11};
  for (std::size_t s = 0; s < ranks.size(); ++s) {
    int beat = ranks[static_cast<std::size_t>(s)] - 1;  // distractors scoring above the true target
    std::vector<double> src(static_cast<std::size_t>(dim), 0.0);
    src[15] = 1.0;  // true score = 1
    for (int j = 0; j < 11; ++j) src[static_cast<std::size_t>(j)] = j < beat ? 2.0 : 0.5;
    sources.push_back(src);
    trues.push_back(axis(15, 1.0));
    true_texts.push_back("t" + std::to_string(s));
  }
  std::vector<RetrievalCandidate> pool;
  for (std::size_t j = 0; j < pool_texts.size(); ++j)
    pool.push_back({&pool_texts[j], &pool_embs[j]});

  RetrievalConfig cfg;
  cfg.distractors = 11;  // uses the whole pool: sampling is exhaustive
  cfg.top_n = {1, 3, 10};
  RetrievalResult r = precision_at_n_core(sources, true_texts, trues, pool, cfg);
  CHECK_THAT(r.p_at_n[1], Catch::Matchers::WithinAbs(0.25, 1e-12));
  CHECK_THAT(r.p_at_n[3], Catch::Matchers::WithinAbs(0.5, 1e-12));
  CHECK_THAT(r.p_at_n[10], Catch::Matchers::WithinAbs(0.75, 1e-12));

  // P@1 <= P@3 <= P@10 always
  CHECK(r.p_at_n[1] <= r.p_at_n[3]);
  CHECK(r.p_at_n[3] <= r.p_at_n[10]);

  cfg.distractors = 12;
  CHECK_THROWS_AS(precision_at_n_core(sources, true_texts, trues, pool, cfg),
                  ConfigError);
  cfg.distractors = 11;
  cfg.top_n = {13};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("precision_at_n matches brute force on randomized instances") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    int dim = 4 + static_cast<int>(rng.below(5));
    int num_sources = 3 + static_cast<int>(rng.below(6));
    int pool_size = 8 + static_cast<int>(rng.below(8));
    std::vector<std::vector<double>> sources, trues;
    std::vector<std::string> true_texts, pool_texts;
    std::vector<std::vector<double>> pool_embs;
    for (int j = 0; j < pool_size; ++j) {
      pool_texts.push_back("cand" + std::to_string(j));
      pool_embs.push_back(rand_vec(dim, rng));
    }
    for (int i = 0; i < num_sources; ++i) {
      sources.push_back(rand_vec(dim, rng));
      trues.push_back(rand_vec(dim, rng));
      true_texts.push_back("true" + std::to_string(i));
    }
    std::vector<RetrievalCandidate> pool;
    for (int j = 0; j < pool_size; ++j)
      pool.push_back({&pool_texts[static_cast<std::size_t>(j)],
                      &pool_embs[static_cast<std::size_t>(j)]});
    RetrievalConfig cfg;
    cfg.distractors = pool_size;  // exhaustive: sampling cannot differ
    cfg.top_n = {1, 3};
    RetrievalResult lib = precision_at_n_core(sources, true_texts, trues, pool, cfg);

    std::vector<std::vector<std::vector<double>>> cand_sets(
        static_cast<std::size_t>(num_sources), pool_embs);
    CHECK_THAT(lib.p_at_n[1],
               Catch::Matchers::WithinAbs(
                   p_at_n_oracle(sources, trues, {}, cand_sets, 1), 1e-9));
    CHECK_THAT(lib.p_at_n[3],
               Catch::Matchers::WithinAbs(
                   p_at_n_oracle(sources, trues, {}, cand_sets, 3), 1e-9));
  }
}

TEST_CASE("random embeddings give null-model P@1") {
  Rng rng(13);
  int num_sources = 2000, pool_size = 1200, dim = 8;
  std::vector<std::vector<double>> sources, trues;
  std::vector<std::string> true_texts, pool_texts;
  std::vector<std::vector<double>> pool_embs;
  for (int j = 0; j < pool_size; ++j) {
    pool_texts.push_back("c" + std::to_string(j));
    pool_embs.push_back(rand_vec(dim, rng));
  }
  for (int i = 0; i < num_sources; ++i) {
    sources.push_back(rand_vec(dim, rng));
    trues.push_back(rand_vec(dim, rng));
    true_texts.push_back("t" + std::to_string(i));
  }
  std::vector<RetrievalCandidate> pool;
  for (int j = 0; j < pool_size; ++j)
    pool.push_back({&pool_texts[static_cast<std::size_t>(j)],
                    &pool_embs[static_cast<std::size_t>(j)]});
  RetrievalConfig cfg;
  cfg.distractors = 999;
  cfg.top_n = {1};
  RetrievalResult r = precision_at_n_core(sources, true_texts, trues, pool, cfg);
  CHECK(r.p_at_n[1] < 0.01);  // expectation is 1/1000
}

TEST_CASE("graph laplacian properties") {
  Rng rng(17);
  // random samples: lambda_1 ~ 0 and PSD
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> emb;
    int k = 3 + static_cast<int>(rng.below(8));
    for (int i = 0; i < k; ++i) emb.push_back(rand_vec(5, rng));
    LaplacianResult lap = graph_laplacian(emb);
    REQUIRE(static_cast<int>(lap.eigenvalues.size()) == k);
    CHECK(std::abs(lap.eigenvalues[0]) < 1e-9);
    for (double ev : lap.eigenvalues) CHECK(ev >= -1e-9);
  }

  // three identical embeddings: the limit case W = ones off-diagonal, the
  // K3 Laplacian, eigenvalues {0, 3, 3}
  std::vector<std::vector<double>> same(3, std::vector<double>{1.0, 2.0});
  LaplacianResult k3 = graph_laplacian(same);
  CHECK_THAT(k3.eigenvalues[0], Catch::Matchers::WithinAbs(0.0, 1e-9));
  CHECK_THAT(k3.eigenvalues[1], Catch::Matchers::WithinAbs(3.0, 1e-9));
  CHECK_THAT(k3.eigenvalues[2], Catch::Matchers::WithinAbs(3.0, 1e-9));

  CHECK_THROWS_AS(graph_laplacian({{1.0}}), ConfigError);
  CHECK_THROWS_AS(graph_laplacian(same, "raw"), ConfigError);
}

TEST_CASE("jacobi matches the bisection oracle") {
  Rng rng(19);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + static_cast<int>(rng.below(9));
    std::vector<double> m(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        double v = rng.normal();
        m[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] = v;
        m[static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i)] = v;
      }
    std::vector<double> jac = jacobi_eigenvalues(m, n);
    std::vector<double> ora = xling::test::bisect_eigenvalues(m, n);
    for (int i = 0; i < n; ++i)
      CHECK_THAT(jac[static_cast<std::size_t>(i)],
                 Catch::Matchers::WithinAbs(ora[static_cast<std::size_t>(i)], 1e-9));
  }
}

TEST_CASE("eigen similarity identities") {
  Rng rng(23);
  std::vector<std::vector<double>> src, tgt;
  for (int i = 0; i < 30; ++i) {
    src.push_back(rand_vec(6, rng));
    tgt.push_back(rand_vec(6, rng));
  }
  EigenConfig cfg;
  cfg.sample_size = 5;
  cfg.num_samples = 40;
  cfg.seed = 7;

  // Psi(S, S) = 0 exactly
  CHECK(eigen_similarity_core(src, src, cfg) < 1e-12);

  // symmetric in its arguments (same seeded samples on both sides)
  double st = eigen_similarity_core(src, tgt, cfg);
  double ts = eigen_similarity_core(tgt, src, cfg);
  CHECK_THAT(st, Catch::Matchers::WithinAbs(ts, 1e-12));
  CHECK(st >= 0.0);

  // a global permutation of the pair order leaves Psi unchanged when the
  // samples are the full set (spectra are permutation-invariant)
  EigenConfig full;
  full.sample_size = static_cast<int>(src.size());
  full.num_samples = 3;
  full.seed = 9;
  double base = eigen_similarity_core(src, tgt, full);
  std::vector<std::vector<double>> src_p = src, tgt_p = tgt;
  std::rotate(src_p.begin(), src_p.begin() + 11, src_p.end());
  std::rotate(tgt_p.begin(), tgt_p.begin() + 11, tgt_p.end());
  double rotated = eigen_similarity_core(src_p, tgt_p, full);
  CHECK_THAT(base, Catch::Matchers::WithinAbs(rotated, 1e-9));
}

TEST_CASE("eigen similarity matches a brute-force eigensolver on toy sets") {
  // two fixed 3-vector embedding sets; the full set is the only sample
  std::vector<std::vector<double>> src{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  std::vector<std::vector<double>> tgt{{2.0, 0.5}, {-1.0, 0.25}, {0.0, 3.0}};
  EigenConfig cfg;
  cfg.sample_size = 3;
  cfg.num_samples = 1;
  cfg.seed = 1;
  double psi = eigen_similarity_core(src, tgt, cfg);

  auto spectrum = [](const std::vector<std::vector<double>>& emb) {
    LaplacianResult lap = graph_laplacian(emb);
    return xling::test::bisect_eigenvalues(lap.matrix, static_cast<int>(emb.size()));
  };
  std::vector<double> ls = spectrum(src), lt = spectrum(tgt);
  double expected = 0.0;
  for (int j = 0; j < 3; ++j) {
    double gap = ls[static_cast<std::size_t>(j)] - lt[static_cast<std::size_t>(j)];
    expected += gap * gap;
  }
  CHECK_THAT(psi, Catch::Matchers::WithinAbs(expected, 1e-9));
}

TEST_CASE("sts_eval against gold scores") {
  Rng rng(29);
  Vocabulary v({"pa", "pe", "pi", "po", "pu"}, 5, 40, {3, 4});
  EncoderConfig tiny;
  tiny.word_dim = tiny.char_dim = tiny.model_dim = 8;
  tiny.num_layers = 1;
  tiny.num_heads = 2;
  tiny.filter_dim = 12;
  Model m = init_model(tiny, v, 31);

  const char* words[] = {"pa", "pe", "pi", "po", "pu"};
  auto random_sentence = [&]() {
    std::string s;
    int len = 1 + static_cast<int>(rng.below(5));
    for (int i = 0; i < len; ++i) s += std::string(words[rng.below(5)]) + " ";
    return s;
  };

  // gold equal to the computed angular scores: r = 1 up to fp noise
  std::vector<StsExample> pairs;
  EmbeddingCache cache(m);
  for (int i = 0; i < 40; ++i) {
    StsExample e;
    e.s1 = random_sentence();
    e.s2 = random_sentence();
    e.score = angular_similarity(cache.get(e.s1), cache.get(e.s2));
    pairs.push_back(e);
  }
  CHECK_THAT(sts_eval(m, pairs), Catch::Matchers::WithinAbs(1.0, 1e-9));

  // monotone nonlinear transform of the scores still matches the pearson
  // oracle computed on the raw series
  std::vector<double> predicted, transformed;
  for (StsExample& e : pairs) {
    predicted.push_back(e.score);
    e.score = std::exp(2.0 * e.score);  // monotone, nonlinear
    transformed.push_back(e.score);
  }
  CHECK_THAT(sts_eval(m, pairs),
             Catch::Matchers::WithinAbs(pearson_oracle(predicted, transformed), 1e-9));

  // shuffled gold: no correlation
  std::vector<StsExample> shuffled;
  for (int i = 0; i < 1000; ++i) {
    StsExample e;
    e.s1 = random_sentence();
    e.s2 = random_sentence();
    e.score = rng.normal();
    shuffled.push_back(e);
  }
  CHECK(std::abs(sts_eval(m, shuffled)) < 0.1);
}

TEST_CASE("transfer training freezes the encoder and separates clusters") {
  Vocabulary v({"ka", "ke", "ki", "ko", "ku", "za", "ze", "zi"}, 5, 40, {3, 4});
  EncoderConfig tiny;
  tiny.word_dim = tiny.char_dim = tiny.model_dim = 8;
  tiny.num_layers = 1;
  tiny.num_heads = 2;
  tiny.filter_dim = 12;
  Model m = init_model(tiny, v, 37);

  // distinct sentences per class; random-init embeddings are distinct
  // points, so a two-hidden-layer net must overfit them
  std::vector<LabeledExample> train;
  const char* pos_words[] = {"ka", "ke", "ki", "ko"};
  const char* neg_words[] = {"za", "ze", "zi", "ku"};
  for (int i = 0; i < 32; ++i) {
    std::string a = std::string(pos_words[i % 4]) + " " + pos_words[(i / 4) % 4];
    std::string b = std::string(neg_words[i % 4]) + " " + neg_words[(i / 4) % 4];
    train.push_back({a, "pos"});
    train.push_back({b, "neg"});
  }
  ClassifierConfig cfg;
  cfg.hidden_dim = 64;
  cfg.learning_rate = 0.01;  // capacity check; the default lr is asserted below
  cfg.epochs = 30;
  cfg.seed = 3;
  TransferTrainResult r = transfer_train({{train, 1.0}}, m, cfg);
  CHECK(r.encoder_hash_before == r.encoder_hash_after);
  CHECK(r.final_train_accuracy >= 0.99);

  // lr decay telemetry at the default configuration: 0.0005 * 0.9^e
  {
    ClassifierConfig defaults;
    defaults.hidden_dim = 16;
    defaults.seed = 3;
    TransferTrainResult d = transfer_train({{train, 1.0}}, m, defaults);
    REQUIRE(d.epoch_effective_lrs.size() == 20);
    for (int e = 0; e < 20; ++e)
      CHECK_THAT(d.epoch_effective_lrs[static_cast<std::size_t>(e)],
                 Catch::Matchers::WithinAbs(0.0005 * std::pow(0.9, e), 1e-15));
  }

  // test set identical to the train set after overfit
  TransferEvalResult eval = transfer_eval(train, m, r.classifier);
  CHECK_THAT(eval.accuracy, Catch::Matchers::WithinAbs(r.final_train_accuracy, 1e-12));

  // unseen label counted incorrect
  std::vector<LabeledExample> with_unknown = train;
  with_unknown.push_back({"ka ka", "mystery"});
  TransferEvalResult eval2 = transfer_eval(with_unknown, m, r.classifier);
  CHECK(eval2.unseen_labels == 1);
  CHECK(eval2.accuracy < 1.0);
}

TEST_CASE("random labels give chance accuracy") {
  Vocabulary v({"ma", "me", "mi", "mo", "mu", "na", "ne", "ni"}, 5, 40, {3, 4});
  EncoderConfig tiny;
  tiny.word_dim = tiny.char_dim = tiny.model_dim = 8;
  tiny.num_layers = 1;
  tiny.num_heads = 2;
  tiny.filter_dim = 12;
  Model m = init_model(tiny, v, 41);

  Rng rng(43);
  const char* words[] = {"ma", "me", "mi", "mo", "mu", "na", "ne", "ni"};
  auto sentence = [&]() {
    std::string s;
    for (int i = 0; i < 4; ++i) s += std::string(words[rng.below(8)]) + " ";
    return s;
  };
  std::vector<LabeledExample> train, test;
  for (int i = 0; i < 200; ++i)
    train.push_back({sentence(), rng.below(2) ? "a" : "b"});
  for (int i = 0; i < 800; ++i)
    test.push_back({sentence(), rng.below(2) ? "a" : "b"});

  ClassifierConfig cfg;
  cfg.hidden_dim = 32;
  cfg.epochs = 5;
  cfg.seed = 5;
  TransferTrainResult r = transfer_train({{train, 1.0}}, m, cfg);
  TransferEvalResult eval = transfer_eval(test, m, r.classifier);
  CHECK(eval.accuracy > 0.45);
  CHECK(eval.accuracy < 0.55);
}

TEST_CASE("few-shot portions mix sources") {
  Vocabulary v({"ra", "re", "ri"}, 5, 40, {3, 4});
  EncoderConfig tiny;
  tiny.word_dim = tiny.char_dim = tiny.model_dim = 8;
  tiny.num_layers = 1;
  tiny.num_heads = 2;
  tiny.filter_dim = 12;
  Model m = init_model(tiny, v, 47);

  std::vector<LabeledExample> a, b;
  for (int i = 0; i < 40; ++i) {
    a.push_back({i % 2 ? "ra ra" : "re re", i % 2 ? "x" : "y"});
    b.push_back({i % 2 ? "ri ri" : "ra re", i % 2 ? "x" : "y"});
  }
  ClassifierConfig cfg;
  cfg.hidden_dim = 16;
  cfg.epochs = 2;
  TransferTrainResult r = transfer_train({{a, 1.0}, {b, 0.5}}, m, cfg);
  CHECK(r.final_train_accuracy > 0.0);
  CHECK_THROWS_AS(transfer_train({{a, 1.5}}, m, cfg), ConfigError);
  CHECK_THROWS_AS(transfer_train({{{}, 1.0}}, m, cfg), ConfigError);
}
