// Copyright 2026 The iseeq Authors
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

// Text normalization shared by the knowledge graph, entity matching and
// passage scoring. Everything here treats text as bytes: ASCII letters are
// case-folded, bytes >= 0x80 are word characters, everything else separates.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace iseeq::text {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || (u >= '0' && u <= '9') || u >= 0x80;
}

inline char fold(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = fold(c);
  return out;
}

// Trim, lowercase, and join internal whitespace runs with a single '_'.
// "  Career   Options " -> "career_options".
inline std::string canonicalize(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  std::string out;
  out.reserve(e - b);
  bool in_space = false;
  for (std::size_t i = b; i < e; ++i) {
    if (is_space(s[i])) {
      in_space = true;
      continue;
    }
    if (in_space) out.push_back('_');
    in_space = false;
    out.push_back(fold(s[i]));
  }
  return out;
}

struct Token {
  std::string text;   // case-folded word
  std::size_t begin;  // byte span in the source, possessive suffix included
  std::size_t end;
};

namespace detail {

// Length of a possessive suffix ('s or U+2019 s) starting at `i`, or 0.
inline std::size_t possessive_len(std::string_view s, std::size_t i) {
  std::size_t n = 0;
  if (i < s.size() && s[i] == '\'') {
    n = 1;
  } else if (s.substr(i, 3) == "\xE2\x80\x99") {
    n = 3;
  } else {
    return 0;
  }
  if (i + n >= s.size() || fold(s[i + n]) != 's') return 0;
  if (i + n + 1 < s.size() && is_word_byte(s[i + n + 1])) return 0;
  return n + 1;
}

}  // namespace detail

// Split into word tokens. "physician's assistant" yields "physician" (span
// covering the 's) and "assistant"; underscores separate like spaces.
inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    // U+2019 is three bytes >= 0x80; keep it out of words so possessives split.
    if (!is_word_byte(s[i]) || s.substr(i, 3) == "\xE2\x80\x99") {
      i += (s.substr(i, 3) == "\xE2\x80\x99") ? 3 : 1;
      continue;
    }
    const std::size_t b = i;
    while (i < s.size() && is_word_byte(s[i]) && s.substr(i, 3) != "\xE2\x80\x99") ++i;
    Token t{lower(s.substr(b, i - b)), b, i};
    const std::size_t p = detail::possessive_len(s, i);
    i += p;
    t.end = i;
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : tokenize(s)) out.push_back(std::move(t.text));
  return out;
}

// Key used to compare phrases regardless of case, spacing or underscores:
// the token texts joined by '_'. "Career Options" and "career_options" share
// the key "career_options".
inline std::string match_key(std::string_view phrase) {
  std::string key;
  for (const auto& t : tokenize(phrase)) {
    if (!key.empty()) key.push_back('_');
    key += t.text;
  }
  return key;
}

}  // namespace iseeq::text
