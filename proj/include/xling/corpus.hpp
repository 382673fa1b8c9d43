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
#include <string>
#include <vector>

#include <json.hpp>

#include "xling/errors.hpp"
#include "xling/hashing.hpp"

namespace xling {

enum class TaskKind { kResponse, kQuickThought, kNli, kTranslation };

inline const char* task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::kResponse: return "response";
    case TaskKind::kQuickThought: return "quick_thought";
    case TaskKind::kNli: return "nli";
    case TaskKind::kTranslation: return "translation";
  }
  return "?";
}

inline TaskKind task_kind_from_name(const std::string& name) {
  if (name == "response") return TaskKind::kResponse;
  if (name == "quick_thought") return TaskKind::kQuickThought;
  if (name == "nli") return TaskKind::kNli;
  if (name == "translation") return TaskKind::kTranslation;
  throw ConfigError("unknown task kind: " + name);
}

enum class NliLabel : int { kEntailment = 0, kContradiction = 1, kNeutral = 2 };

inline const char* nli_label_name(int label) {
  switch (label) {
    case 0: return "entailment";
    case 1: return "contradiction";
    case 2: return "neutral";
  }
  return "?";
}

inline int nli_label_from_name(const std::string& name) {
  if (name == "entailment") return 0;
  if (name == "contradiction") return 1;
  if (name == "neutral") return 2;
  return -1;
}

// ---- JSONL record types ----

struct TranslationExample {
  std::string src, tgt;
  std::vector<std::string> negatives;
};

struct ResponseExample {
  std::string input, response;
};

struct TripletExample {
  std::string prev, cur, next;
};

struct NliExample {
  std::string premise, hypothesis;
  int label = 0;
};

struct LabeledExample {
  std::string text, label;
};

struct StsExample {
  std::string s1, s2;
  double score = 0.0;
};

template <class T>
struct SplitCorpus {
  std::vector<T> train;
  std::vector<T> dev;
  std::size_t total() const { return train.size() + dev.size(); }
};

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline nlohmann::json parse_line(const std::string& path, std::size_t lineno,
                                 const std::string& line) {
  try {
    nlohmann::json j = nlohmann::json::parse(line);
    if (!j.is_object())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
  }
}

inline std::string require_string(const nlohmann::json& j, const char* field,
                                  const std::string& path, std::size_t lineno) {
  if (!j.contains(field) || !j.at(field).is_string())
    throw SchemaError(path + ":" + std::to_string(lineno) +
                      ": missing or non-string field \"" + field + "\"");
  return j.at(field).get<std::string>();
}

// Deterministic 90/10 split: rank lines by (fnv1a64(raw line), index) and
// send the lowest 10% of ranks to dev. Exact on any line count, stable
// across runs and platforms, and a partition by construction.
inline std::vector<bool> dev_mask(const std::vector<std::string>& lines) {
  std::size_t n = lines.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = fnv1a64(lines[i]);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return a < b;
  });
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < n / 10; ++i) mask[order[i]] = true;
  return mask;
}

template <class T, class ParseFn>
SplitCorpus<T> load_jsonl(const std::string& path, ParseFn parse) {
  SplitCorpus<T> out;
  std::vector<std::string> lines = read_lines(path);
  std::vector<std::string> content;
  std::vector<std::size_t> linenos;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    content.push_back(lines[i]);
    linenos.push_back(i + 1);
  }
  std::vector<bool> dev = dev_mask(content);
  for (std::size_t i = 0; i < content.size(); ++i) {
    T ex = parse(parse_line(path, linenos[i], content[i]), path, linenos[i]);
    (dev[i] ? out.dev : out.train).push_back(std::move(ex));
  }
  return out;
}

}  // namespace detail

namespace detail {

inline TranslationExample parse_translation(const nlohmann::json& j,
                                            const std::string& p, std::size_t ln) {
  TranslationExample e;
  e.src = require_string(j, "src", p, ln);
  e.tgt = require_string(j, "tgt", p, ln);
  if (j.contains("negatives")) {
    if (!j.at("negatives").is_array())
      throw SchemaError(p + ":" + std::to_string(ln) + ": \"negatives\" must be an array");
    for (const auto& neg : j.at("negatives")) {
      if (!neg.is_string())
        throw SchemaError(p + ":" + std::to_string(ln) + ": negatives must be strings");
      e.negatives.push_back(neg.get<std::string>());
    }
  }
  return e;
}

}  // namespace detail

inline SplitCorpus<TranslationExample> load_translation_corpus(const std::string& path) {
  return detail::load_jsonl<TranslationExample>(path, detail::parse_translation);
}

// all pairs in file order, no split; mining rewrites files this way
inline std::vector<TranslationExample> load_translation_corpus_all(const std::string& path) {
  std::vector<TranslationExample> out;
  std::vector<std::string> lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(detail::parse_translation(detail::parse_line(path, i + 1, lines[i]), path, i + 1));
  }
  return out;
}

inline SplitCorpus<ResponseExample> load_response_corpus(const std::string& path) {
  return detail::load_jsonl<ResponseExample>(
      path, [](const nlohmann::json& j, const std::string& p, std::size_t ln) {
        return ResponseExample{detail::require_string(j, "input", p, ln),
                               detail::require_string(j, "response", p, ln)};
      });
}

inline SplitCorpus<TripletExample> load_triplet_corpus(const std::string& path) {
  return detail::load_jsonl<TripletExample>(
      path, [](const nlohmann::json& j, const std::string& p, std::size_t ln) {
        return TripletExample{detail::require_string(j, "prev", p, ln),
                              detail::require_string(j, "cur", p, ln),
                              detail::require_string(j, "next", p, ln)};
      });
}

inline SplitCorpus<NliExample> load_nli_corpus(const std::string& path) {
  return detail::load_jsonl<NliExample>(
      path, [](const nlohmann::json& j, const std::string& p, std::size_t ln) {
        NliExample e;
        e.premise = detail::require_string(j, "premise", p, ln);
        e.hypothesis = detail::require_string(j, "hypothesis", p, ln);
        std::string label = detail::require_string(j, "label", p, ln);
        e.label = nli_label_from_name(label);
        if (e.label < 0)
          throw SchemaError(p + ":" + std::to_string(ln) + ": unknown NLI label \"" + label + "\"");
        return e;
      });
}

inline SplitCorpus<LabeledExample> load_labeled_corpus(const std::string& path) {
  return detail::load_jsonl<LabeledExample>(
      path, [](const nlohmann::json& j, const std::string& p, std::size_t ln) {
        return LabeledExample{detail::require_string(j, "text", p, ln),
                              detail::require_string(j, "label", p, ln)};
      });
}

inline SplitCorpus<StsExample> load_sts_corpus(const std::string& path) {
  return detail::load_jsonl<StsExample>(
      path, [](const nlohmann::json& j, const std::string& p, std::size_t ln) {
        StsExample e;
        e.s1 = detail::require_string(j, "s1", p, ln);
        e.s2 = detail::require_string(j, "s2", p, ln);
        if (!j.contains("score") || !j.at("score").is_number())
          throw SchemaError(p + ":" + std::to_string(ln) + ": missing or non-numeric \"score\"");
        e.score = j.at("score").get<double>();
        return e;
      });
}

}  // namespace xling
