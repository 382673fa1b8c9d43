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
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "xling/errors.hpp"
#include "xling/hashing.hpp"
#include "xling/tokenize.hpp"

namespace xling {

// Sentence text mapped to id space: tokens, one word id per token (known
// unigram or OOV hash bucket), and the char n-gram bucket ids per token.
struct TokenizedSentence {
  std::vector<std::string> tokens;
  std::vector<int> word_ids;
  std::vector<std::vector<int>> ngram_ids;

  std::size_t length() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

inline constexpr int kDefaultMaxSequenceLength = 64;
inline constexpr const char* kEmptySentenceToken = "<empty>";

// Unigram id table with hashed out-of-vocabulary buckets plus a separate
// hashed char-n-gram id space. Immutable once built; safe for concurrent
// readers. Word ids: known tokens take 0..V-1, OOV tokens hash into
// V..V+B-1. N-gram ids live in their own 0..C-1 space.
class Vocabulary {
 public:
  Vocabulary() = default;

  Vocabulary(std::vector<std::string> tokens_by_id, int oov_buckets,
             int ngram_buckets, std::vector<int> ngram_orders)
      : id_to_token_(std::move(tokens_by_id)),
        oov_buckets_(oov_buckets),
        ngram_buckets_(ngram_buckets),
        ngram_orders_(std::move(ngram_orders)) {
    if (oov_buckets_ < 1 || ngram_buckets_ < 1)
      throw ConfigError("vocabulary: bucket counts must be positive");
    for (std::size_t i = 0; i < id_to_token_.size(); ++i)
      token_to_id_.emplace(id_to_token_[i], static_cast<int>(i));
    if (token_to_id_.size() != id_to_token_.size())
      throw ConfigError("vocabulary: duplicate tokens");
  }

  int unigram_count() const { return static_cast<int>(id_to_token_.size()); }
  int oov_buckets() const { return oov_buckets_; }
  int ngram_buckets() const { return ngram_buckets_; }
  const std::vector<int>& ngram_orders() const { return ngram_orders_; }

  // total word id space: known unigrams followed by OOV buckets
  int word_id_space() const { return unigram_count() + oov_buckets_; }

  int lookup(const std::string& token) const {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    return unigram_count() +
           static_cast<int>(fnv1a64(token) % static_cast<std::uint64_t>(oov_buckets_));
  }

  std::vector<int> ngram_ids(const std::string& token) const {
    std::vector<int> ids;
    for (const std::string& gram : char_ngrams(token, ngram_orders_))
      ids.push_back(static_cast<int>(fnv1a64(gram) %
                                     static_cast<std::uint64_t>(ngram_buckets_)));
    return ids;
  }

  // Tokenize, clip to max_len and map to ids. Text with no tokens becomes
  // the single designated "<empty>" token so downstream encoding always has
  // at least one position.
  TokenizedSentence prepare(std::string_view text,
                            int max_len = kDefaultMaxSequenceLength) const {
    TokenizedSentence s;
    s.tokens = tokenize(text);
    if (s.tokens.empty()) s.tokens.emplace_back(kEmptySentenceToken);
    if (static_cast<int>(s.tokens.size()) > max_len) s.tokens.resize(static_cast<std::size_t>(max_len));
    s.word_ids.reserve(s.tokens.size());
    s.ngram_ids.reserve(s.tokens.size());
    for (const std::string& tok : s.tokens) {
      s.word_ids.push_back(lookup(tok));
      s.ngram_ids.push_back(ngram_ids(tok));
    }
    return s;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"version", 1},
                          {"hash_algorithm", "fnv1a64"},
                          {"oov_buckets", oov_buckets_},
                          {"ngram_buckets", ngram_buckets_},
                          {"ngram_orders", ngram_orders_},
                          {"tokens", id_to_token_}};
  }

  static Vocabulary from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j.at("version").get<int>() != 1)
      throw ParseError("vocabulary: unsupported file version");
    if (j.at("hash_algorithm").get<std::string>() != "fnv1a64")
      throw ParseError("vocabulary: unknown hash algorithm tag");
    return Vocabulary(j.at("tokens").get<std::vector<std::string>>(),
                      j.at("oov_buckets").get<int>(),
                      j.at("ngram_buckets").get<int>(),
                      j.at("ngram_orders").get<std::vector<int>>());
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("vocabulary: cannot write " + path);
    out << to_json().dump(2) << "\n";
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("vocabulary: cannot read " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("vocabulary: bad JSON in " + path + ": " + e.what());
    }
    return from_json(j);
  }

  // hash of the canonical serialization; checkpoints store this to tie a
  // parameter set to the vocabulary it was trained with
  std::uint64_t content_hash() const { return fnv1a64(to_json().dump()); }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  int oov_buckets_ = 1;
  int ngram_buckets_ = 1;
  std::vector<int> ngram_orders_{3, 4};
};

// Top-V tokens by frequency over the tokenized corpora, ties broken
// lexicographically.
inline Vocabulary build_vocab(const std::vector<std::string>& corpus_paths,
                              int max_unigrams, int oov_buckets,
                              int ngram_buckets,
                              std::vector<int> ngram_orders = {3, 4}) {
  std::unordered_map<std::string, long long> counts;
  for (const std::string& path : corpus_paths) {
    std::ifstream in(path);
    if (!in) throw IoError("build_vocab: cannot read " + path);
    std::string line;
    while (std::getline(in, line))
      for (std::string& tok : tokenize(line)) ++counts[std::move(tok)];
  }
  std::vector<std::pair<std::string, long long>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(items.size()) > max_unigrams)
    items.resize(static_cast<std::size_t>(max_unigrams));
  std::vector<std::string> tokens;
  tokens.reserve(items.size());
  for (auto& [tok, n] : items) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens), oov_buckets, ngram_buckets,
                    std::move(ngram_orders));
}

}  // namespace xling
