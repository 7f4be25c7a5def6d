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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"

#include "aapr/error.hpp"
#include "aapr/latex.hpp"
#include "aapr/rng.hpp"
#include "aapr/text.hpp"

namespace aapr {

/// The seven modules a paper is divided into, in the order the model pools
/// them.
enum class Module : std::size_t {
  title,
  authors,
  abstract,
  introduction,
  related_work,
  methods,
  conclusion,
};

inline constexpr std::size_t kNumModules = 7;
/// Modules that are sequences of sentences (abstract .. conclusion).
inline constexpr std::size_t kNumTextModules = 5;

inline constexpr std::array<std::string_view, kNumModules> kModuleNames = {
    "title", "authors", "abstract", "introduction", "related_work", "methods", "conclusion",
};

inline std::string_view module_name(Module m) { return kModuleNames[static_cast<std::size_t>(m)]; }

inline Module module_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumModules; ++i) {
    if (kModuleNames[i] == name) return static_cast<Module>(i);
  }
  throw ConfigError("unknown module '" + std::string(name) + "'");
}

/// Index into PaperRecord::modules for a text module.
inline std::size_t text_index(Module m) {
  const auto i = static_cast<std::size_t>(m);
  if (i < 2) throw ConfigError("not a text module: " + std::string(module_name(m)));
  return i - 2;
}

inline Module text_module(std::size_t index) { return static_cast<Module>(index + 2); }

using Sentence = std::vector<std::string>;
using ModuleText = std::vector<Sentence>;

struct RawPaper {
  std::string paper_id;
  std::string latex_source;
  std::string venue;
};

/// One paper decomposed into tokenized modules plus its accept label.
struct PaperRecord {
  std::string paper_id;
  int label = 0;
  std::vector<std::string> title;
  std::vector<std::string> authors;
  /// abstract, introduction, related_work, methods, conclusion.
  std::array<ModuleText, kNumTextModules> modules;

  ModuleText& text(Module m) { return modules[text_index(m)]; }
  const ModuleText& text(Module m) const { return modules[text_index(m)]; }

  bool operator==(const PaperRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Labels

/// Venues that count as an acceptance, compared trimmed and case-folded.
class AcceptList {
 public:
  AcceptList() = default;

  explicit AcceptList(const std::vector<std::string>& venues) {
    for (const auto& v : venues) {
      if (auto key = normalize(v); !key.empty()) venues_.push_back(std::move(key));
    }
    if (venues_.empty()) throw ConfigError("accept-list is empty");
    std::sort(venues_.begin(), venues_.end());
  }

  /// One venue per line; '#' starts a comment.
  static AcceptList parse(std::istream& in) {
    std::vector<std::string> venues;
    std::string line;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      venues.push_back(line);
    }
    return AcceptList(venues);
  }

  static AcceptList load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open accept-list " + path);
    return parse(in);
  }

  bool accepts(std::string_view venue) const {
    return std::binary_search(venues_.begin(), venues_.end(), normalize(venue));
  }

  static std::string normalize(std::string_view v) {
    std::size_t a = 0, b = v.size();
    while (a < b && std::isspace(static_cast<unsigned char>(v[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(v[b - 1]))) --b;
    std::string out(v.substr(a, b - a));
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  }

 private:
  std::vector<std::string> venues_;
};

inline int label_from_venue(std::string_view venue, const AcceptList& accept) {
  return accept.accepts(venue) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// LaTeX -> record

/// One author name becomes one token: lowercase words joined by '_'.
inline std::string normalize_author(std::string_view name) {
  return text::join(text::tokenize(name), "_");
}

inline ModuleText sentences_of(std::string_view text) {
  ModuleText out;
  for (const auto& s : text::split_sentences(text)) {
    if (auto toks = text::tokenize(s); !toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

inline PaperRecord make_record(std::string paper_id, int label, const latex::ParsedSource& parsed) {
  PaperRecord r;
  r.paper_id = std::move(paper_id);
  r.label = label;
  r.title = text::tokenize(parsed.title);
  for (const auto& a : parsed.authors) {
    if (auto tok = normalize_author(a); !tok.empty()) r.authors.push_back(std::move(tok));
  }
  r.text(Module::abstract) = sentences_of(parsed.abstract);
  r.text(Module::introduction) = sentences_of(parsed.introduction);
  r.text(Module::related_work) = sentences_of(parsed.related_work);
  r.text(Module::methods) = sentences_of(parsed.methods);
  r.text(Module::conclusion) = sentences_of(parsed.conclusion);
  return r;
}

struct IngestOutcome {
  std::optional<PaperRecord> record;  // empty when the paper was skipped
  std::vector<std::string> warnings;
};

inline IngestOutcome ingest_one(const RawPaper& raw, const AcceptList& accept) {
  IngestOutcome out;
  if (raw.latex_source.empty()) {
    out.warnings.push_back(raw.paper_id + ": empty source, skipped");
    return out;
  }
  try {
    auto parsed = latex::parse_latex(raw.latex_source);
    for (const auto& w : parsed.warnings) out.warnings.push_back(raw.paper_id + ": " + w);
    out.record = make_record(raw.paper_id, label_from_venue(raw.venue, accept), parsed);
  } catch (const MalformedSource& e) {
    out.warnings.push_back(raw.paper_id + ": " + e.what() + ", skipped");
  }
  return out;
}

/// Parses papers on up to `threads` workers. Outcomes keep input order.
inline std::vector<IngestOutcome> ingest(const std::vector<RawPaper>& papers,
                                         const AcceptList& accept, std::size_t threads = 1) {
  std::vector<IngestOutcome> outcomes(papers.size());
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, papers.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < papers.size(); i = next++) {
      outcomes[i] = ingest_one(papers[i], accept);
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  return outcomes;
}

// ---------------------------------------------------------------------------
// JSONL

inline std::string to_json_line(const PaperRecord& r) {
  nlohmann::ordered_json j;
  j["paper_id"] = r.paper_id;
  j["label"] = r.label;
  j["title"] = r.title;
  j["authors"] = r.authors;
  for (std::size_t m = 0; m < kNumTextModules; ++m) {
    j[std::string(module_name(text_module(m)))] = r.modules[m];
  }
  return j.dump();
}

inline PaperRecord record_from_json(const nlohmann::json& j) {
  PaperRecord r;
  r.paper_id = j.at("paper_id").get<std::string>();
  r.label = j.at("label").get<int>();
  if (r.label != 0 && r.label != 1) throw std::invalid_argument("label must be 0 or 1");
  r.title = j.at("title").get<std::vector<std::string>>();
  r.authors = j.at("authors").get<std::vector<std::string>>();
  for (std::size_t m = 0; m < kNumTextModules; ++m) {
    r.modules[m] = j.at(std::string(module_name(text_module(m)))).get<ModuleText>();
  }
  return r;
}

inline void write_jsonl(std::ostream& out, const std::vector<PaperRecord>& records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

inline void write_jsonl(const std::string& path, const std::vector<PaperRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_jsonl(out, records);
}

/// Blank lines are ignored; anything else must be one record object.
inline std::vector<PaperRecord> read_jsonl(std::istream& in) {
  std::vector<PaperRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return records;
}

inline std::vector<PaperRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus " + path);
  return read_jsonl(in);
}

// ---------------------------------------------------------------------------
// Synthetic corpora

inline constexpr std::string_view kAcceptCue = "novelsignal";
inline constexpr std::string_view kRejectCue = "flawsignal";

struct SynthOptions {
  std::size_t filler_vocab = 400;
  std::size_t author_pool = 300;
  std::size_t star_pool = 10;
  std::size_t min_sentences = 2, max_sentences = 4;
  std::size_t min_words = 5, max_words = 8;
  std::size_t min_title = 4, max_title = 7;
  std::size_t max_authors = 3;
  /// Chance that an accept-template paper lists a star author; the reject
  /// template uses one minus this.
  double star_rate = 0.7;
  /// Chance that the cue planted in a module agrees with the template.
  double conclusion_reliability = 1.0;
  double module_reliability = 0.65;
  /// Each text module opens with a sentence drawn from its own small
  /// vocabulary ("conclusion_k"); cues never land in that sentence.
  std::size_t heading_vocab = 5;
  std::size_t heading_words = 4;
};

/// Deterministic synthetic corpus with a label signal planted in modules.
///
/// With probability `separation` a paper follows the template of its own
/// label, otherwise a template picked by a fair coin. Every text module gets
/// one cue token, `kAcceptCue` or `kRejectCue`, that agrees with the template
/// with the module's reliability. The conclusion is the most reliable module,
/// and a module-specific opening sentence lets a model tell modules apart.
/// Star authors add a weaker author-side signal.
inline std::vector<PaperRecord> synth_corpus(std::size_t n, std::uint64_t seed, double separation,
                                             const SynthOptions& opt = {}) {
  if (n < 2) throw ConfigError("synth_corpus needs n >= 2");
  if (!(separation >= 0.0 && separation <= 1.0)) {
    throw ConfigError("separation must lie in [0, 1]");
  }
  Rng rng(seed);
  std::vector<int> labels(n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n / 2), 1);
  rng.shuffle(std::span<int>(labels));

  auto numbered = [](std::string_view prefix, std::uint64_t n, std::size_t width) {
    std::string digits = std::to_string(n);
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    return std::string(prefix) + digits;
  };
  auto filler = [&] { return numbered("w", rng.below(opt.filler_vocab), 3); };
  auto sentence = [&] {
    Sentence s(static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(opt.min_words),
                                                    static_cast<std::int64_t>(opt.max_words))));
    for (auto& w : s) w = filler();
    return s;
  };

  std::vector<PaperRecord> records(n);
  for (std::size_t i = 0; i < n; ++i) {
    PaperRecord& r = records[i];
    r.paper_id = numbered("synth-", i, 6);
    r.label = labels[i];
    const int tmpl = rng.bernoulli(separation) ? r.label : static_cast<int>(rng.below(2));

    r.title.resize(static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(opt.min_title), static_cast<std::int64_t>(opt.max_title))));
    for (auto& w : r.title) w = filler();

    const std::size_t n_authors = 1 + rng.below(opt.max_authors);
    const bool star = rng.bernoulli(tmpl == 1 ? opt.star_rate : 1.0 - opt.star_rate);
    const std::size_t star_slot = rng.below(n_authors);
    for (std::size_t a = 0; a < n_authors; ++a) {
      r.authors.push_back(star && a == star_slot ? numbered("star_", rng.below(opt.star_pool), 2)
                                                 : numbered("author_", rng.below(opt.author_pool), 3));
    }

    const std::size_t first_body = opt.heading_vocab > 0 ? 1 : 0;
    for (std::size_t m = 0; m < kNumTextModules; ++m) {
      auto& module = r.modules[m];
      module.resize(first_body + static_cast<std::size_t>(rng.between(
                                     static_cast<std::int64_t>(opt.min_sentences),
                                     static_cast<std::int64_t>(opt.max_sentences))));
      for (auto& s : module) s = sentence();
      if (first_body == 1) {
        const std::string prefix = std::string(kModuleNames[m + 2]) + "_";
        module[0].resize(opt.heading_words);
        for (auto& w : module[0]) w = numbered(prefix, rng.below(opt.heading_vocab), 1);
      }
    }

    for (std::size_t m = 0; m < kNumTextModules; ++m) {
      const double reliability = text_module(m) == Module::conclusion ? opt.conclusion_reliability
                                                                      : opt.module_reliability;
      const int vote = rng.bernoulli(reliability) ? tmpl : 1 - tmpl;
      auto& module = r.modules[m];
      auto& s = module[first_body + rng.below(module.size() - first_body)];
      // Mid-sentence, so no word window reaches back into the opening sentence.
      const std::size_t lead = std::min<std::size_t>(2, s.size() - 1);
      s[lead + rng.below(s.size() - lead)] = std::string(vote == 1 ? kAcceptCue : kRejectCue);
    }
  }
  return records;
}

/// The cue planted in a module: 1 for accept, 0 for reject, -1 when absent.
inline int cue_vote(const ModuleText& module) {
  for (const auto& s : module) {
    for (const auto& w : s) {
      if (w == kAcceptCue) return 1;
      if (w == kRejectCue) return 0;
    }
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Splits

struct SplitRatios {
  double train = 0.896, val = 0.052, test = 0.052;
};

struct CorpusSplit {
  std::vector<PaperRecord> train, val, test;
};

inline CorpusSplit split_corpus(std::vector<PaperRecord> records, const SplitRatios& ratios,
                                std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-6) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  Rng rng(seed);
  rng.shuffle(std::span<PaperRecord>(records));
  const std::size_t n = records.size();
  const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(ratios.train * double(n))));
  const auto n_val =
      std::min(n - n_train, static_cast<std::size_t>(std::llround(ratios.val * double(n))));
  CorpusSplit out;
  auto begin = std::make_move_iterator(records.begin());
  out.train.assign(begin, begin + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(begin + static_cast<std::ptrdiff_t>(n_train),
                 begin + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(begin + static_cast<std::ptrdiff_t>(n_train + n_val),
                  std::make_move_iterator(records.end()));
  return out;
}

}  // namespace aapr
