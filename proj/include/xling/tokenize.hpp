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

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace xling {

// Treebank-style tokenization, lowercased. Splits punctuation into separate
// tokens and peels English contraction suffixes ("don't" -> "do", "n't").
// It is a deliberately small subset of the full PTB rules, but it is
// idempotent: tokenizing the space-joined output reproduces the tokens.
//
// Only ASCII is lowercased; other bytes pass through untouched and are
// treated as word characters.

namespace detail {

inline bool is_split_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '(': case ')': case '[': case ']': case '{': case '}':
    case '"': case '`': case '\'': case '$': case '%': case '#':
    case '&': case '*': case '+': case '=': case '<': case '>':
    case '/': case '\\': case '|': case '~': case '^': case '@':
      return true;
    default:
      return false;
  }
}

inline const std::array<std::string_view, 7>& contraction_suffixes() {
  static const std::array<std::string_view, 7> kSuffixes = {
      "n't", "'ll", "'re", "'ve", "'s", "'m", "'d"};
  return kSuffixes;
}

inline bool is_contraction_token(std::string_view s) {
  for (std::string_view suf : contraction_suffixes())
    if (s == suf) return true;
  return false;
}

// splits one whitespace-delimited chunk into tokens
inline void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  if (chunk.empty()) return;
  if (is_contraction_token(chunk)) {  // already a contraction token: keep
    out.emplace_back(chunk);
    return;
  }
  // leading punctuation
  std::size_t begin = 0;
  while (begin < chunk.size() && is_split_punct(chunk[begin])) {
    out.emplace_back(1, chunk[begin]);
    ++begin;
  }
  if (begin == chunk.size()) return;
  // trailing punctuation, emitted after the core below
  std::size_t end = chunk.size();
  std::vector<char> tail;
  while (end > begin && is_split_punct(chunk[end - 1])) {
    tail.push_back(chunk[end - 1]);
    --end;
  }
  std::string_view core = chunk.substr(begin, end - begin);
  // contraction suffixes peel off the right repeatedly ("they'd've")
  std::vector<std::string> suffixes;
  bool peeled = true;
  while (peeled && !core.empty()) {
    peeled = false;
    for (std::string_view suf : contraction_suffixes()) {
      if (core.size() > suf.size() && core.ends_with(suf)) {
        suffixes.emplace_back(suf);
        core = core.substr(0, core.size() - suf.size());
        peeled = true;
        break;
      }
    }
  }
  if (!core.empty()) out.emplace_back(core);
  for (auto it = suffixes.rbegin(); it != suffixes.rend(); ++it)
    out.push_back(*it);
  for (auto it = tail.rbegin(); it != tail.rend(); ++it)
    out.emplace_back(1, *it);
}

}  // namespace detail

inline std::vector<std::string> tokenize(std::string_view text) {
  std::string lowered(text);
  for (char& c : lowered)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && (lowered[i] == ' ' || lowered[i] == '\t' ||
                                  lowered[i] == '\n' || lowered[i] == '\r'))
      ++i;
    std::size_t start = i;
    while (i < lowered.size() && lowered[i] != ' ' && lowered[i] != '\t' &&
           lowered[i] != '\n' && lowered[i] != '\r')
      ++i;
    if (i > start)
      detail::split_chunk(std::string_view(lowered).substr(start, i - start), out);
  }
  return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

// All contiguous character n-grams of "^token$" for each order, in order of
// increasing start position (3-grams first, then 4-grams for orders {3,4}).
inline std::vector<std::string> char_ngrams(std::string_view token,
                                            const std::vector<int>& orders) {
  std::string marked = "^";
  marked += token;
  marked += '$';
  std::vector<std::string> grams;
  for (int n : orders) {
    if (static_cast<std::size_t>(n) > marked.size()) continue;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= marked.size(); ++i)
      grams.push_back(marked.substr(i, static_cast<std::size_t>(n)));
  }
  return grams;
}

}  // namespace xling
