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

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "xling/errors.hpp"
#include "xling/rng.hpp"
#include "xling/tokenize.hpp"

namespace xling {

// Toy bilingual corpus: "language A" sentences come from a small template
// grammar over a generated lexicon; "language B" is a deterministic
// bijective token remapping of A with a disjoint surface (different
// syllable inventory), so cross-lingual alignment must be learned rather
// than read off shared substrings.
struct SyntheticSpec {
  int translation_pairs = 2000;
  int pool_extra = 1000;    // unpaired extra B sentences for retrieval pools
  int response_pairs = 2000;   // per language
  int triplets = 1998;         // per language; documents of 5 sentences
  int nli_examples = 2001;     // label-balanced by cycling
  int labeled_train = 600;
  int labeled_test = 600;
  int sts_pairs = 300;
  int nouns = 20;
  int verbs = 12;  // even; verbs pair into antonyms (2i, 2i+1)
  int adjectives = 10;  // first half positive class, second half negative
  int adverbs = 8;
  int determiners = 3;
  std::uint64_t seed = 1;
  std::uint64_t mapping_seed = 2;
};

class SyntheticGenerator {
 public:
  explicit SyntheticGenerator(const SyntheticSpec& spec)
      : spec_(spec), rng_(spec.seed) {
    if (spec_.verbs < 2 || spec_.verbs % 2 != 0)
      throw ConfigError("synthetic: verbs must be even and >= 2");
    if (spec_.adjectives < 2 || spec_.adjectives % 2 != 0)
      throw ConfigError("synthetic: adjectives must be even and >= 2");
    build_lexicons();
  }

  const std::unordered_map<std::string, std::string>& token_mapping() const {
    return a_to_b_;
  }

  std::string map_sentence(const std::string& a_sentence) const {
    std::string out;
    for (const std::string& tok : tokenize(a_sentence)) {
      auto it = a_to_b_.find(tok);
      if (it == a_to_b_.end())
        throw ConfigError("synthetic: token outside lexicon: " + tok);
      if (!out.empty()) out += ' ';
      out += it->second;
    }
    return out;
  }

  // a full random sentence from the grammar
  std::string sentence() {
    std::string s = noun_phrase();
    s += ' ' + pick(verbs_);
    if (rng_.uniform01() < 0.5) s += ' ' + pick(adverbs_);
    if (rng_.uniform01() < 0.3) s += ' ' + noun_phrase();
    return s;
  }

  void generate(const std::string& out_dir);

 private:
  std::string noun_phrase() {
    std::string s = pick(determiners_);
    if (rng_.uniform01() < 0.5) s += ' ' + pick(adjectives_);
    s += ' ' + pick(nouns_);
    return s;
  }

  std::string labeled_sentence(bool positive) {
    const auto& pool = positive ? adj_pos_ : adj_neg_;
    std::string s = pick(determiners_) + ' ' + pick(pool) + ' ' + pick(nouns_);
    s += ' ' + pick(verbs_);
    if (rng_.uniform01() < 0.5) s += ' ' + pick(adverbs_);
    return s;
  }

  // full-slot sentence used as an NLI premise
  std::string premise_sentence() {
    return pick(determiners_) + ' ' + pick(adjectives_) + ' ' + pick(nouns_) +
           ' ' + pick(verbs_) + ' ' + pick(adverbs_);
  }

  const std::string& pick(const std::vector<std::string>& pool) {
    return pool[static_cast<std::size_t>(rng_.below(pool.size()))];
  }

  void build_lexicons() {
    int total = spec_.determiners + spec_.adjectives + spec_.nouns +
                spec_.verbs + spec_.adverbs;
    std::vector<std::string> a_words = make_words("bdklmnr", total, rng_);
    Rng map_rng(spec_.mapping_seed);
    std::vector<std::string> b_words = make_words("fgpstvz", total, map_rng);
    std::vector<std::size_t> perm(static_cast<std::size_t>(total));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    map_rng.shuffle(perm);
    for (int i = 0; i < total; ++i)
      a_to_b_.emplace(a_words[static_cast<std::size_t>(i)], b_words[perm[static_cast<std::size_t>(i)]]);

    auto take = [&](int n) {
      std::vector<std::string> out(a_words.begin(), a_words.begin() + n);
      a_words.erase(a_words.begin(), a_words.begin() + n);
      return out;
    };
    determiners_ = take(spec_.determiners);
    adjectives_ = take(spec_.adjectives);
    adj_pos_.assign(adjectives_.begin(), adjectives_.begin() + spec_.adjectives / 2);
    adj_neg_.assign(adjectives_.begin() + spec_.adjectives / 2, adjectives_.end());
    nouns_ = take(spec_.nouns);
    verbs_ = take(spec_.verbs);
    adverbs_ = take(spec_.adverbs);
  }

  static std::vector<std::string> make_words(const std::string& consonants,
                                             int count, Rng& rng) {
    static const std::string vowels = "aeiou";
    std::unordered_set<std::string> seen;
    std::vector<std::string> words;
    while (static_cast<int>(words.size()) < count) {
      int syllables = 2 + static_cast<int>(rng.below(2));
      std::string w;
      for (int s = 0; s < syllables; ++s) {
        w += consonants[static_cast<std::size_t>(rng.below(consonants.size()))];
        w += vowels[static_cast<std::size_t>(rng.below(vowels.size()))];
      }
      if (seen.insert(w).second) words.push_back(std::move(w));
    }
    return words;
  }

  SyntheticSpec spec_;
  Rng rng_;
  std::unordered_map<std::string, std::string> a_to_b_;
  std::vector<std::string> determiners_, adjectives_, adj_pos_, adj_neg_,
      nouns_, verbs_, adverbs_;
};

inline void SyntheticGenerator::generate(const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> all_text;
  auto note = [&](const std::string& s) { all_text.push_back(s); };

  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(out_dir) / name);
    if (!out) throw IoError("synthetic: cannot write " + name + " in " + out_dir);
    return out;
  };
  auto emit = [](std::ofstream& out, const nlohmann::json& j) {
    out << j.dump() << "\n";
  };

  // translation pairs with unique source sentences, plus extra pool targets
  {
    std::ofstream pairs = open("translation.jsonl");
    std::ofstream pool = open("pool_b.txt");
    std::set<std::string> used;
    int written = 0;
    while (written < spec_.translation_pairs) {
      std::string a = sentence();
      if (!used.insert(a).second) continue;
      std::string b = map_sentence(a);
      emit(pairs, {{"src", a}, {"tgt", b}});
      pool << b << "\n";
      note(a);
      note(b);
      ++written;
    }
    int extra = 0;
    while (extra < spec_.pool_extra) {
      std::string a = sentence();
      if (!used.insert(a).second) continue;
      std::string b = map_sentence(a);
      pool << b << "\n";
      note(b);
      ++extra;
    }
  }

  // conversational response pairs: the response echoes the input reversed,
  // so matching pairs share lexical content but not token order
  {
    std::ofstream res_a = open("response_a.jsonl");
    std::ofstream res_b = open("response_b.jsonl");
    for (int i = 0; i < spec_.response_pairs; ++i) {
      std::string a = sentence();
      std::vector<std::string> toks = tokenize(a);
      std::reverse(toks.begin(), toks.end());
      std::string ra = join_tokens(toks);
      emit(res_a, {{"input", a}, {"response", ra}});
      emit(res_b, {{"input", map_sentence(a)}, {"response", map_sentence(ra)}});
      note(a);
      note(ra);
      note(map_sentence(a));
      note(map_sentence(ra));
    }
  }

  // adjacent-sentence triplets: five-sentence documents that share a topic
  // noun, sliced into consecutive (prev, cur, next) windows
  {
    std::ofstream tri_a = open("triplet_a.jsonl");
    std::ofstream tri_b = open("triplet_b.jsonl");
    int emitted = 0;
    while (emitted < spec_.triplets) {
      const std::string& topic = nouns_[static_cast<std::size_t>(rng_.below(nouns_.size()))];
      std::vector<std::string> doc;
      for (int s = 0; s < 5; ++s) {
        std::string sent = pick(determiners_);
        if (rng_.uniform01() < 0.5) sent += ' ' + pick(adjectives_);
        sent += ' ' + topic + ' ' + pick(verbs_);
        if (rng_.uniform01() < 0.5) sent += ' ' + pick(adverbs_);
        doc.push_back(sent);
        note(sent);
        note(map_sentence(sent));
      }
      for (std::size_t i = 1; i + 1 < doc.size() && emitted < spec_.triplets; ++i, ++emitted) {
        emit(tri_a, {{"prev", doc[i - 1]}, {"cur", doc[i]}, {"next", doc[i + 1]}});
        emit(tri_b, {{"prev", map_sentence(doc[i - 1])},
                     {"cur", map_sentence(doc[i])},
                     {"next", map_sentence(doc[i + 1])}});
      }
    }
  }

  // NLI: entailment drops the modifiers, contradiction swaps the verb for
  // its antonym partner, neutral pairs with an unrelated sentence; labels
  // cycle so the three classes stay balanced
  {
    std::ofstream nli = open("nli_a.jsonl");
    for (int i = 0; i < spec_.nli_examples; ++i) {
      std::string premise = premise_sentence();
      std::vector<std::string> toks = tokenize(premise);  // det adj noun verb adv
      std::string hypothesis;
      const char* label = "";
      switch (i % 3) {
        case 0: {
          label = "entailment";
          hypothesis = toks[0] + ' ' + toks[2] + ' ' + toks[3];
          break;
        }
        case 1: {
          label = "contradiction";
          std::size_t v = 0;
          for (std::size_t k = 0; k < verbs_.size(); ++k)
            if (verbs_[k] == toks[3]) v = k;
          std::vector<std::string> h = toks;
          h[3] = verbs_[v ^ 1];  // antonym partner
          hypothesis = join_tokens(h);
          break;
        }
        default: {
          label = "neutral";
          hypothesis = premise_sentence();
          break;
        }
      }
      emit(nli, {{"premise", premise}, {"hypothesis", hypothesis}, {"label", label}});
      note(premise);
      note(hypothesis);
    }
  }

  // binary labeled data for transfer classification; B files mirror the A
  // files through the token mapping, which is the zero-shot analogue of a
  // professionally translated test set
  {
    std::ofstream a_train = open("labeled_a_train.jsonl");
    std::ofstream a_test = open("labeled_a_test.jsonl");
    std::ofstream b_train = open("labeled_b_train.jsonl");
    std::ofstream b_test = open("labeled_b_test.jsonl");
    auto emit_labeled = [&](std::ofstream& fa, std::ofstream& fb, int count) {
      for (int i = 0; i < count; ++i) {
        bool positive = i % 2 == 0;
        std::string text = labeled_sentence(positive);
        const char* label = positive ? "pos" : "neg";
        emit(fa, {{"text", text}, {"label", label}});
        emit(fb, {{"text", map_sentence(text)}, {"label", label}});
        note(text);
        note(map_sentence(text));
      }
    };
    emit_labeled(a_train, b_train, spec_.labeled_train);
    emit_labeled(a_test, b_test, spec_.labeled_test);
  }

  // STS-style pairs: gold similarity from token overlap after replacing a
  // random number of slots
  {
    std::ofstream sts = open("sts_a.jsonl");
    for (int i = 0; i < spec_.sts_pairs; ++i) {
      std::string s1 = premise_sentence();
      std::vector<std::string> toks = tokenize(s1);
      int replace = static_cast<int>(rng_.below(toks.size() + 1));
      std::vector<std::size_t> slots(toks.size());
      for (std::size_t k = 0; k < slots.size(); ++k) slots[k] = k;
      rng_.shuffle(slots);
      std::vector<std::string> t2 = toks;
      for (int k = 0; k < replace; ++k) {
        switch (slots[static_cast<std::size_t>(k)]) {
          case 0: t2[0] = pick(determiners_); break;
          case 1: t2[1] = pick(adjectives_); break;
          case 2: t2[2] = pick(nouns_); break;
          case 3: t2[3] = pick(verbs_); break;
          default: t2[4] = pick(adverbs_); break;
        }
      }
      std::string s2 = join_tokens(t2);
      int same = 0;
      for (std::size_t k = 0; k < toks.size(); ++k)
        if (toks[k] == t2[k]) ++same;
      double score = 5.0 * static_cast<double>(same) / static_cast<double>(toks.size());
      emit(sts, {{"s1", s1}, {"s2", s2}, {"score", score}});
      note(s1);
      note(s2);
    }
  }

  {
    std::ofstream text = open("all_text.txt");
    for (const std::string& s : all_text) text << s << "\n";
  }
}

inline void generate_synthetic_corpus(const SyntheticSpec& spec,
                                      const std::string& out_dir) {
  SyntheticGenerator(spec).generate(out_dir);
}

}  // namespace xling
