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
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "xling/checkpoint.hpp"
#include "xling/corpus.hpp"
#include "xling/errors.hpp"
#include "xling/graph.hpp"
#include "xling/mining.hpp"

namespace xling {

enum class ClassifierArch { kOneHidden, kTwoHidden512 };

inline const char* classifier_arch_name(ClassifierArch a) {
  return a == ClassifierArch::kOneHidden ? "one_hidden" : "two_hidden_512";
}

inline ClassifierArch classifier_arch_from_name(const std::string& name) {
  if (name == "one_hidden") return ClassifierArch::kOneHidden;
  if (name == "two_hidden_512") return ClassifierArch::kTwoHidden512;
  throw ConfigError("unknown classifier architecture: " + name);
}

// Frozen-encoder transfer classifier configuration: tanh hidden layers over
// the sentence embedding, adaptive-moment optimization with a per-epoch
// learning-rate decay.
struct ClassifierConfig {
  ClassifierArch architecture = ClassifierArch::kTwoHidden512;
  int hidden_dim = 512;
  double learning_rate = 0.0005;
  double lr_decay = 0.9;  // applied at every epoch
  int batch_size = 16;
  int epochs = 20;
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden_dim < 1) throw ConfigError("classifier: hidden_dim must be positive");
    if (epochs < 1) throw ConfigError("classifier: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("classifier: batch_size must be >= 1");
    if (learning_rate <= 0) throw ConfigError("classifier: learning_rate must be > 0");
  }
};

struct TransferClassifier {
  ClassifierConfig config;
  std::vector<std::string> labels;  // sorted; logits follow this order
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  int label_index(const std::string& label) const {
    auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it == labels.end() || *it != label) return -1;
    return static_cast<int>(it - labels.begin());
  }

  Value logits(Graph& g, Value x) {
    for (std::size_t layer = 0; layer < weights.size(); ++layer) {
      x = g.add_row_bias(g.matmul(x, g.leaf(weights[layer])), g.leaf(biases[layer]));
      if (layer + 1 < weights.size()) x = g.tanh(x);
    }
    return x;
  }

  int predict(const std::vector<double>& embedding) {
    Graph g;
    Value x = g.input(Tensor::matrix(1, static_cast<int>(embedding.size()), embedding));
    const Tensor& out = g.value(logits(g, x));
    int best = 0;
    for (int j = 1; j < out.cols(); ++j)
      if (out.at(0, j) > out.at(0, best)) best = j;
    return best;
  }
};

namespace detail {

inline TransferClassifier init_classifier(const ClassifierConfig& cfg, int input_dim,
                                          std::vector<std::string> labels, Rng& rng) {
  TransferClassifier c;
  c.config = cfg;
  c.labels = std::move(labels);
  std::vector<int> dims{input_dim};
  if (cfg.architecture == ClassifierArch::kTwoHidden512) {
    dims.push_back(cfg.hidden_dim);
    dims.push_back(cfg.hidden_dim);
  } else {
    dims.push_back(cfg.hidden_dim);
  }
  dims.push_back(static_cast<int>(c.labels.size()));
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    c.weights.push_back(init_fan_in(dims[i], dims[i + 1], rng));
    c.biases.push_back(init_vector(dims[i + 1], 0.0));
  }
  return c;
}

// Adam with bias correction; beta1 0.9, beta2 0.999, eps 1e-8.
class Adam {
 public:
  explicit Adam(std::vector<Tensor*> params) : params_(std::move(params)) {
    for (Tensor* p : params_) {
      m_.emplace_back(p->values.size(), 0.0);
      v_.emplace_back(p->values.size(), 0.0);
    }
  }

  void step(double lr) {
    ++t_;
    double bc1 = 1.0 - std::pow(0.9, t_);
    double bc2 = 1.0 - std::pow(0.999, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = *params_[i];
      if (p.grad.empty()) continue;
      for (std::size_t k = 0; k < p.values.size(); ++k) {
        double g = p.grad[k];
        m_[i][k] = 0.9 * m_[i][k] + 0.1 * g;
        v_[i][k] = 0.999 * v_[i][k] + 0.001 * g * g;
        p.values[k] -= lr * (m_[i][k] / bc1) / (std::sqrt(v_[i][k] / bc2) + 1e-8);
      }
      p.zero_grad();
    }
  }

 private:
  std::vector<Tensor*> params_;
  std::vector<std::vector<double>> m_, v_;
  double t_ = 0;
};

}  // namespace detail

// One labeled source with the fraction of its examples to use (few-shot
// regimes mix full source-language data with a slice of target-language
// data). The slice is a seeded subsample, deterministic per source index.
struct TrainPortion {
  std::vector<LabeledExample> examples;
  double fraction = 1.0;
};

struct TransferTrainResult {
  TransferClassifier classifier;
  std::vector<double> epoch_effective_lrs;  // telemetry: lr * decay^epoch
  double final_train_accuracy = 0.0;
  std::string encoder_hash_before, encoder_hash_after;
};

// Trains the classifier on frozen encoder embeddings. The encoder is never
// part of the gradient tape here; the parameter hash asserted before and
// after makes the freeze contract checkable.
inline TransferTrainResult transfer_train(std::vector<TrainPortion> sources,
                                          Model& model, const ClassifierConfig& cfg) {
  cfg.validate();
  std::string hash_before = params_hash_hex(model);

  std::vector<LabeledExample> train;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    TrainPortion& portion = sources[s];
    if (portion.fraction < 0.0 || portion.fraction > 1.0)
      throw ConfigError("transfer_train: fraction must be in [0, 1]");
    std::size_t take = static_cast<std::size_t>(
        std::llround(portion.fraction * static_cast<double>(portion.examples.size())));
    std::vector<std::size_t> order(portion.examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng sub_rng(mix_seed(cfg.seed, 0x5AB5, s));
    sub_rng.shuffle(order);
    for (std::size_t i = 0; i < take; ++i)
      train.push_back(portion.examples[order[i]]);
  }
  if (train.empty()) throw ConfigError("transfer_train: no training examples");

  std::set<std::string> label_set;
  for (const LabeledExample& e : train) label_set.insert(e.label);
  std::vector<std::string> labels(label_set.begin(), label_set.end());
  if (labels.size() < 2) throw ConfigError("transfer_train: need >= 2 labels");

  EmbeddingCache cache(model);
  std::vector<std::vector<double>> features;
  std::vector<int> targets;
  int dim = 0;
  for (const LabeledExample& e : train) {
    features.push_back(cache.get(e.text));
    dim = static_cast<int>(features.back().size());
    int t = static_cast<int>(std::lower_bound(labels.begin(), labels.end(), e.label) -
                             labels.begin());
    targets.push_back(t);
  }

  Rng rng(cfg.seed);
  TransferTrainResult result;
  result.classifier = detail::init_classifier(cfg, dim, labels, rng);
  TransferClassifier& clf = result.classifier;
  std::vector<Tensor*> params;
  for (Tensor& w : clf.weights) params.push_back(&w);
  for (Tensor& b : clf.biases) params.push_back(&b);
  detail::Adam adam(params);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cfg.learning_rate * std::pow(cfg.lr_decay, epoch);
    result.epoch_effective_lrs.push_back(lr);
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      int rows = static_cast<int>(stop - start);
      std::vector<double> data;
      std::vector<int> batch_targets;
      data.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(dim));
      for (std::size_t i = start; i < stop; ++i) {
        const std::vector<double>& f = features[order[i]];
        data.insert(data.end(), f.begin(), f.end());
        batch_targets.push_back(targets[order[i]]);
      }
      Graph g;
      Value x = g.input(Tensor::matrix(rows, dim, std::move(data)));
      Value loss = g.softmax_cross_entropy(clf.logits(g, x), batch_targets);
      g.backward(loss);
      adam.step(lr);
    }
  }

  long correct = 0;
  for (std::size_t i = 0; i < features.size(); ++i)
    if (clf.predict(features[i]) == targets[i]) ++correct;
  result.final_train_accuracy =
      static_cast<double>(correct) / static_cast<double>(features.size());

  result.encoder_hash_before = hash_before;
  result.encoder_hash_after = params_hash_hex(model);
  if (result.encoder_hash_before != result.encoder_hash_after)
    throw StateError("transfer_train: encoder changed during classifier training");
  return result;
}

struct TransferEvalResult {
  double accuracy = 0.0;
  long total = 0;
  long unseen_labels = 0;  // counted as incorrect
};

inline TransferEvalResult transfer_eval(const std::vector<LabeledExample>& test,
                                        Model& model, TransferClassifier& clf) {
  if (test.empty()) throw ConfigError("transfer_eval: empty test set");
  EmbeddingCache cache(model);
  TransferEvalResult r;
  r.total = static_cast<long>(test.size());
  long correct = 0;
  std::set<std::string> warned;
  for (const LabeledExample& e : test) {
    int want = clf.label_index(e.label);
    if (want < 0) {
      ++r.unseen_labels;
      if (warned.insert(e.label).second)
        std::cerr << "transfer_eval: label \"" << e.label
                  << "\" was never trained; counting as incorrect\n";
      continue;
    }
    if (clf.predict(cache.get(e.text)) == want) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
  return r;
}

}  // namespace xling
