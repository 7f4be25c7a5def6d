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

// Small shared setups for the model tests.

#include <vector>

#include "aapr/aapr.hpp"

namespace aapr::testing {

struct TinyData {
  Vocab words, authors;
  Lengths lengths{6, 3, 2};
  std::vector<PaperRecord> records;
  std::vector<EncodedPaper> encoded;
};

inline TinyData tiny_data(std::size_t n, std::uint64_t seed, double separation = 1.0, Lengths lengths = {6, 3, 2}) {
  TinyData d;
  d.lengths = lengths;
  d.records = synth_corpus(n, seed, separation);
  d.words = Vocab::build(d.records, VocabField::words, 50000);
  d.authors = Vocab::build(d.records, VocabField::authors, 20000);
  d.encoded = encode_all(d.records, d.words, d.authors, d.lengths);
  return d;
}

/// embed 8, 4 filters everywhere.
inline ModelConfig tiny_config(const TinyData& d, Ablation ablation = Ablation::full) {
  ModelConfig c;
  c.word_vocab = d.words.size();
  c.author_vocab = d.authors.size();
  c.embed_dim = 8;
  c.word_filters = c.sentence_filters = c.attention_dim = 4;
  c.lengths = d.lengths;
  c.ablation = ablation;
  return c;
}

}  // namespace aapr::testing
