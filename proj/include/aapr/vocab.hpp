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
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aapr/corpus.hpp"
#include "aapr/error.hpp"

namespace aapr {

inline constexpr std::size_t kDefaultWordVocab = 50000;
inline constexpr std::size_t kDefaultAuthorVocab = 20000;

enum class VocabField { words, authors };

/// Frequency-ranked token -> id map. Ids 0 and 1 are PAD and UNK.
class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab() : Vocab(std::vector<std::string>{}, 3) {}

  /// Counts the selected field over `records` (which should be the training
  /// split) and keeps the `size_cap - 2` most frequent tokens; equal counts
  /// are ordered lexicographically.
  static Vocab build(std::span<const PaperRecord> records, VocabField field, std::size_t size_cap) {
    if (size_cap < 3) throw ConfigError("vocabulary size cap must be at least 3");
    if (records.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& r : records) {
      if (field == VocabField::authors) {
        for (const auto& a : r.authors) ++counts[a];
        continue;
      }
      for (const auto& w : r.title) ++counts[w];
      for (const auto& module : r.modules) {
        for (const auto& s : module) {
          for (const auto& w : s) ++counts[w];
        }
      }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > size_cap - 2) ranked.resize(size_cap - 2);
    std::vector<std::string> tokens;
    tokens.reserve(ranked.size());
    for (auto& [tok, _] : ranked) tokens.push_back(std::move(tok));
    return Vocab(std::move(tokens), size_cap);
  }

  std::int32_t id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
  }

  const std::string& token(std::int32_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  std::size_t size() const { return tokens_.size(); }
  std::size_t size_cap() const { return size_cap_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocab& o) const { return size_cap_ == o.size_cap_ && tokens_ == o.tokens_; }

  /// Text form: first line is the size cap, then one token per line in id
  /// order, starting with the two reserved tokens.
  void save(std::ostream& out) const {
    out << size_cap_ << '\n';
    for (const auto& t : tokens_) out << t << '\n';
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write vocabulary " + path);
    save(out);
  }

  static Vocab load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing size cap header", 1);
    std::size_t cap = 0;
    try {
      std::size_t used = 0;
      cap = std::stoull(line, &used);
      if (used != line.size()) throw std::invalid_argument(line);
    } catch (const std::exception&) {
      throw ParseError("bad size cap header '" + line + "'", 1);
    }
    std::vector<std::string> tokens;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line.find_first_of(" \t\r") != std::string::npos) {
        throw ParseError("invalid token '" + line + "'", lineno);
      }
      tokens.push_back(line);
    }
    if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
      throw ParseError("vocabulary must start with " + std::string(kPadToken) + " and " +
                       std::string(kUnkToken));
    }
    if (tokens.size() > cap) throw ParseError("more tokens than the size cap");
    tokens.erase(tokens.begin(), tokens.begin() + 2);
    return Vocab(std::move(tokens), cap);
  }

  static Vocab load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open vocabulary " + path);
    return load(in);
  }

 private:
  Vocab(std::vector<std::string> regular, std::size_t cap) : size_cap_(cap) {
    tokens_.reserve(regular.size() + 2);
    tokens_.emplace_back(kPadToken);
    tokens_.emplace_back(kUnkToken);
    for (auto& t : regular) tokens_.push_back(std::move(t));
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!index_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second) {
        throw ParseError("duplicate token '" + tokens_[i] + "'");
      }
    }
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::size_t size_cap_;
};

/// Padding lengths: words per sentence (also the title), sentences per
/// module and authors per paper.
struct Lengths {
  std::size_t words = 32;
  std::size_t sentences = 24;
  std::size_t authors = 8;

  bool operator==(const Lengths&) const = default;
};

/// Sentences x words id block of one text module, right-padded.
struct EncodedModule {
  std::vector<std::int32_t> ids;     // sentences * words, row-major
  std::vector<std::uint8_t> mask;    // 1 = real token
  std::vector<std::size_t> lengths;  // real tokens per sentence row

  std::size_t real_sentences() const {
    return static_cast<std::size_t>(std::count_if(lengths.begin(), lengths.end(),
                                                  [](std::size_t n) { return n > 0; }));
  }
};

struct EncodedPaper {
  std::string paper_id;
  int label = 0;
  Lengths lengths;
  std::vector<std::int32_t> title;
  std::vector<std::uint8_t> title_mask;
  std::vector<std::int32_t> authors;
  std::vector<std::uint8_t> author_mask;
  std::array<EncodedModule, kNumTextModules> modules;

  std::size_t title_length() const {
    return static_cast<std::size_t>(std::count(title_mask.begin(), title_mask.end(), 1));
  }
  std::size_t author_count() const {
    return static_cast<std::size_t>(std::count(author_mask.begin(), author_mask.end(), 1));
  }
};

namespace detail {

inline void encode_row(const std::vector<std::string>& tokens, const Vocab& vocab, std::size_t width,
                       std::int32_t* ids, std::uint8_t* mask) {
  const std::size_t n = std::min(width, tokens.size());
  for (std::size_t i = 0; i < width; ++i) {
    ids[i] = i < n ? vocab.id(tokens[i]) : Vocab::kPad;
    mask[i] = i < n ? 1 : 0;
  }
}

}  // namespace detail

/// Maps tokens to ids and pads or truncates to `lengths`. Sentences without
/// tokens are skipped so real rows always form a prefix of the module block.
inline EncodedPaper encode(const PaperRecord& record, const Vocab& words, const Vocab& authors,
                           const Lengths& lengths) {
  if (lengths.words == 0 || lengths.sentences == 0 || lengths.authors == 0) {
    throw ConfigError("padding lengths must be positive");
  }
  EncodedPaper e;
  e.paper_id = record.paper_id;
  e.label = record.label;
  e.lengths = lengths;
  e.title.resize(lengths.words);
  e.title_mask.resize(lengths.words);
  detail::encode_row(record.title, words, lengths.words, e.title.data(), e.title_mask.data());
  e.authors.resize(lengths.authors);
  e.author_mask.resize(lengths.authors);
  detail::encode_row(record.authors, authors, lengths.authors, e.authors.data(), e.author_mask.data());
  for (std::size_t m = 0; m < kNumTextModules; ++m) {
    EncodedModule& block = e.modules[m];
    block.ids.assign(lengths.sentences * lengths.words, Vocab::kPad);
    block.mask.assign(lengths.sentences * lengths.words, 0);
    block.lengths.assign(lengths.sentences, 0);
    std::size_t row = 0;
    for (const auto& sentence : record.modules[m]) {
      if (row == lengths.sentences) break;
      if (sentence.empty()) continue;
      detail::encode_row(sentence, words, lengths.words, &block.ids[row * lengths.words],
                         &block.mask[row * lengths.words]);
      block.lengths[row] = std::min(sentence.size(), lengths.words);
      ++row;
    }
  }
  return e;
}

/// Inverse of encode up to truncation; out-of-vocabulary tokens come back as
/// "<unk>".
inline PaperRecord decode(const EncodedPaper& e, const Vocab& words, const Vocab& authors) {
  PaperRecord r;
  r.paper_id = e.paper_id;
  r.label = e.label;
  for (std::size_t i = 0; i < e.title.size(); ++i) {
    if (e.title_mask[i]) r.title.push_back(words.token(e.title[i]));
  }
  for (std::size_t i = 0; i < e.authors.size(); ++i) {
    if (e.author_mask[i]) r.authors.push_back(authors.token(e.authors[i]));
  }
  for (std::size_t m = 0; m < kNumTextModules; ++m) {
    const EncodedModule& block = e.modules[m];
    for (std::size_t s = 0; s < e.lengths.sentences; ++s) {
      if (block.lengths[s] == 0) continue;
      Sentence sentence;
      for (std::size_t w = 0; w < block.lengths[s]; ++w) {
        sentence.push_back(words.token(block.ids[s * e.lengths.words + w]));
      }
      r.modules[m].push_back(std::move(sentence));
    }
  }
  return r;
}

inline std::vector<EncodedPaper> encode_all(std::span<const PaperRecord> records, const Vocab& words,
                                            const Vocab& authors, const Lengths& lengths) {
  std::vector<EncodedPaper> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode(r, words, authors, lengths));
  return out;
}

}  // namespace aapr
