// Copyright 2026 The AAPR Authors.
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
#include <array>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace aapr::text {

using Tokens = std::vector<std::string>;

namespace detail {

/// Decodes one UTF-8 code point starting at `pos`. Invalid bytes decode as
/// themselves with length 1 so arbitrary input never throws.
inline char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& len) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    if (int c1 = cont(1); c1 >= 0) {
      len = 2;
      return (char32_t(b0 & 0x1F) << 6) | char32_t(c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      len = 3;
      return (char32_t(b0 & 0x0F) << 12) | (char32_t(c1) << 6) | char32_t(c2);
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      len = 4;
      return (char32_t(b0 & 0x07) << 18) | (char32_t(c1) << 12) | (char32_t(c2) << 6) |
             char32_t(c3);
    }
  }
  len = 1;
  return b0;
}

inline bool is_unicode_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

inline bool is_punct(char32_t c) {
  if (c < 0x80) return std::ispunct(static_cast<int>(c)) != 0;
  switch (c) {
    case 0xA1: case 0xAB: case 0xBB: case 0xBF:      // ¡ « » ¿
    case 0x2013: case 0x2014: case 0x2018: case 0x2019:
    case 0x201C: case 0x201D: case 0x2026:
      return true;
    default:
      return false;
  }
}

struct CodePoint {
  char32_t value;
  std::size_t offset;
  std::size_t length;
};

inline std::vector<CodePoint> code_points(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) {
    std::size_t len = 1;
    const char32_t c = decode_utf8(s, pos, len);
    out.push_back({c, pos, len});
    pos += len;
  }
  return out;
}

/// Strips leading and trailing punctuation code points from one
/// whitespace-free chunk and lowercases ASCII letters.
inline std::string clean_chunk(std::string_view chunk) {
  const auto cps = code_points(chunk);
  std::size_t first = 0, last = cps.size();
  while (first < last && is_punct(cps[first].value)) ++first;
  while (last > first && is_punct(cps[last - 1].value)) --last;
  if (first == last) return {};
  std::string out(chunk.substr(cps[first].offset,
                               cps[last - 1].offset + cps[last - 1].length - cps[first].offset));
  for (char& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

}  // namespace detail

/// Lowercases, splits on Unicode whitespace and trims punctuation at token
/// edges. Hyphens inside a word survive ("state-of-the-art").
inline Tokens tokenize(std::string_view input) {
  Tokens tokens;
  std::size_t start = std::string_view::npos;
  auto flush = [&](std::size_t end) {
    if (start == std::string_view::npos) return;
    if (auto tok = detail::clean_chunk(input.substr(start, end - start)); !tok.empty()) {
      tokens.push_back(std::move(tok));
    }
    start = std::string_view::npos;
  };
  for (std::size_t pos = 0; pos < input.size();) {
    std::size_t len = 1;
    const char32_t c = detail::decode_utf8(input, pos, len);
    if (detail::is_unicode_space(c)) {
      flush(pos);
    } else if (start == std::string_view::npos) {
      start = pos;
    }
    pos += len;
  }
  flush(input.size());
  return tokens;
}

inline std::string join(const Tokens& tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

/// Lowercase abbreviations whose final period never ends a sentence.
inline constexpr std::array<std::string_view, 40> kAbbreviations = {
    "et al.", "e.g.",  "i.e.",  "cf.",   "etc.",  "vs.",   "fig.",  "figs.",
    "eq.",    "eqs.",  "sec.",  "secs.", "tab.",  "ref.",  "refs.", "no.",
    "vol.",   "pp.",   "p.",    "ch.",   "chap.", "app.",  "def.",  "thm.",
    "lem.",   "prop.", "cor.",  "alg.",  "approx.", "resp.", "dr.", "mr.",
    "mrs.",   "ms.",   "prof.", "st.",   "jr.",   "inc.",  "ltd.",  "dept.",
};

namespace detail {

inline bool ends_with_abbreviation(std::string_view text, std::size_t period_pos) {
  // text[period_pos] == '.'
  for (std::string_view abbr : kAbbreviations) {
    if (abbr.size() > period_pos + 1) continue;
    const std::size_t begin = period_pos + 1 - abbr.size();
    bool match = true;
    for (std::size_t i = 0; i < abbr.size() && match; ++i) {
      const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text[begin + i])));
      match = c == abbr[i] || (abbr[i] == ' ' && std::isspace(static_cast<unsigned char>(c)));
    }
    if (!match) continue;
    if (begin == 0 || !std::isalpha(static_cast<unsigned char>(text[begin - 1]))) return true;
  }
  return false;
}

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

}  // namespace detail

/// Rule-based sentence splitter. A '.', '!' or '?' ends a sentence when it is
/// followed by whitespace and an uppercase letter, or by the end of the text.
/// Periods closing a known abbreviation never split.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    if (auto s = detail::trim(text.substr(start, end - start)); !s.empty()) {
      sentences.push_back(std::move(s));
    }
    start = end;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    const bool at_end = j == text.size();
    const bool before_upper =
        j > i + 1 && j < text.size() && std::isupper(static_cast<unsigned char>(text[j]));
    if (!at_end && !before_upper) continue;
    if (c == '.' && detail::ends_with_abbreviation(text, i)) continue;
    emit(i + 1);
  }
  emit(text.size());
  return sentences;
}

}  // namespace aapr::text
