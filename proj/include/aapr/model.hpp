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

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "aapr/autodiff.hpp"
#include "aapr/corpus.hpp"
#include "aapr/error.hpp"
#include "aapr/params.hpp"
#include "aapr/rng.hpp"
#include "aapr/vocab.hpp"

namespace aapr {

enum class Ablation { full, no_attention, no_module };

inline std::string_view ablation_name(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_attention: return "no_attention";
    case Ablation::no_module: return "no_module";
  }
  return "full";
}

inline Ablation ablation_from_name(std::string_view s) {
  if (s == "full") return Ablation::full;
  if (s == "no_attention") return Ablation::no_attention;
  if (s == "no_module") return Ablation::no_module;
  throw ConfigError("unknown ablation '" + std::string(s) + "'");
}

/// Modules whose vectors are removed before document pooling.
using ModuleMask = std::array<bool, kNumModules>;

inline ModuleMask mask_of(std::span<const Module> modules) {
  ModuleMask m{};
  for (Module x : modules) m[static_cast<std::size_t>(x)] = true;
  return m;
}

inline ModuleMask mask_of(std::initializer_list<Module> modules) {
  return mask_of(std::span<const Module>(modules.begin(), modules.size()));
}

struct ModelConfig {
  std::size_t word_vocab = kDefaultWordVocab;
  std::size_t author_vocab = kDefaultAuthorVocab;
  std::size_t embed_dim = 128;
  std::size_t word_filters = 64;
  std::size_t word_filter_size = 3;
  std::size_t sentence_filters = 64;
  std::size_t sentence_filter_size = 2;
  /// Output size of every attentive pooling layer. In full mode the author
  /// vector is pooled next to the others, so author embeddings take this size.
  std::size_t attention_dim = 128;
  Lengths lengths;
  Ablation ablation = Ablation::full;
  ModuleMask module_mask{};
  /// Debug only: attention weights z.u / sum(exp(z.u)) instead of softmax.
  bool literal_attention = false;

  /// Width of each module vector (and of author embeddings).
  std::size_t module_dim() const {
    switch (ablation) {
      case Ablation::full: return attention_dim;
      case Ablation::no_attention: return sentence_filters;
      case Ablation::no_module: return word_filters;
    }
    return attention_dim;
  }

  /// Width of the document vector fed to the classifier.
  std::size_t document_dim() const { return module_dim(); }

  void validate() const {
    auto positive = [](std::size_t v, const char* what) {
      if (v == 0) throw ConfigError(std::string(what) + " must be at least 1");
    };
    positive(embed_dim, "embed_dim");
    positive(word_filters, "word_filters");
    positive(word_filter_size, "word_filter_size");
    positive(sentence_filters, "sentence_filters");
    positive(sentence_filter_size, "sentence_filter_size");
    positive(attention_dim, "attention_dim");
    positive(lengths.words, "lengths.words");
    positive(lengths.sentences, "lengths.sentences");
    positive(lengths.authors, "lengths.authors");
    if (word_vocab < 2 || author_vocab < 2) throw ConfigError("vocabularies need PAD and UNK");
    if (word_filter_size > lengths.words) {
      throw ConfigError("word filter size exceeds the padded sentence length");
    }
    if (ablation != Ablation::no_module && sentence_filter_size > lengths.sentences) {
      throw ConfigError("sentence filter size exceeds the padded module length");
    }
    if (ablation == Ablation::no_attention && word_filters != sentence_filters) {
      throw ConfigError("no_attention pools title and text vectors together: word_filters must equal "
                        "sentence_filters");
    }
  }

  bool operator==(const ModelConfig&) const = default;
};

inline nlohmann::json to_json(const ModelConfig& c) {
  nlohmann::json mask = nlohmann::json::array();
  for (std::size_t i = 0; i < kNumModules; ++i) {
    if (c.module_mask[i]) mask.push_back(kModuleNames[i]);
  }
  return {
      {"word_vocab", c.word_vocab},
      {"author_vocab", c.author_vocab},
      {"embed_dim", c.embed_dim},
      {"word_filters", c.word_filters},
      {"word_filter_size", c.word_filter_size},
      {"sentence_filters", c.sentence_filters},
      {"sentence_filter_size", c.sentence_filter_size},
      {"attention_dim", c.attention_dim},
      {"lengths", {{"words", c.lengths.words}, {"sentences", c.lengths.sentences}, {"authors", c.lengths.authors}}},
      {"ablation", ablation_name(c.ablation)},
      {"module_mask", mask},
      {"literal_attention", c.literal_attention},
  };
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.word_vocab = j.at("word_vocab");
    c.author_vocab = j.at("author_vocab");
    c.embed_dim = j.at("embed_dim");
    c.word_filters = j.at("word_filters");
    c.word_filter_size = j.at("word_filter_size");
    c.sentence_filters = j.at("sentence_filters");
    c.sentence_filter_size = j.at("sentence_filter_size");
    c.attention_dim = j.at("attention_dim");
    c.lengths.words = j.at("lengths").at("words");
    c.lengths.sentences = j.at("lengths").at("sentences");
    c.lengths.authors = j.at("lengths").at("authors");
    c.ablation = ablation_from_name(j.at("ablation").get<std::string>());
    for (const auto& m : j.at("module_mask")) {
      c.module_mask[static_cast<std::size_t>(module_from_name(m.get<std::string>()))] = true;
    }
    c.literal_attention = j.value("literal_attention", false);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model config: ") + e.what());
  }
  return c;
}

namespace model {

using nn::Parameter;
using nn::ParameterSet;
using nn::Shape;
using nn::Tape;
using nn::Var;

/// Expected (name, shape) layout of the parameters for a configuration.
inline std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig& c) {
  std::vector<std::pair<std::string, Shape>> out;
  const std::size_t a = c.attention_dim, nw = c.word_filters, ns = c.sentence_filters;
  out.push_back({"word_embedding", {c.word_vocab, c.embed_dim}});
  if (c.ablation != Ablation::no_module) {
    out.push_back({"author_embedding", {c.author_vocab, c.module_dim()}});
    out.push_back({"author_weights", {1, c.lengths.authors}});
  }
  out.push_back({"word_conv.weight", {c.word_filter_size * c.embed_dim, nw}});
  out.push_back({"word_conv.bias", {1, nw}});
  if (c.ablation == Ablation::full) {
    out.push_back({"word_attention.weight", {nw, a}});
    out.push_back({"word_attention.bias", {1, a}});
    out.push_back({"word_attention.context", {a, 1}});
  }
  if (c.ablation != Ablation::no_module) {
    const std::size_t in = c.ablation == Ablation::full ? a : nw;
    out.push_back({"sentence_conv.weight", {c.sentence_filter_size * in, ns}});
    out.push_back({"sentence_conv.bias", {1, ns}});
  }
  if (c.ablation == Ablation::full) {
    out.push_back({"sentence_attention.weight", {ns, a}});
    out.push_back({"sentence_attention.bias", {1, a}});
    out.push_back({"sentence_attention.context", {a, 1}});
    out.push_back({"module_attention.weight", {a, a}});
    out.push_back({"module_attention.bias", {1, a}});
    out.push_back({"module_attention.context", {a, 1}});
  }
  out.push_back({"classifier.weight", {c.document_dim(), 2}});
  out.push_back({"classifier.bias", {1, 2}});
  return out;
}

inline bool is_bias(const std::string& name) {
  return name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
}

/// Weights, embeddings and context vectors ~ U(-0.08, 0.08); biases zero;
/// author weights start at 1/A so the author vector begins as an average.
inline ParameterSet init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParameterSet params;
  for (const auto& [name, shape] : parameter_layout(config)) {
    Parameter& p = params.add(name, shape);
    if (name == "author_weights") {
      std::fill(p.value.begin(), p.value.end(), 1.0 / static_cast<double>(config.lengths.authors));
    } else if (!is_bias(name)) {
      for (double& v : p.value) v = rng.uniform(-0.08, 0.08);
    }
  }
  return params;
}

/// Throws ShapeError unless `params` has exactly the layout `config` needs.
inline void check_layout(const ModelConfig& config, const ParameterSet& params) {
  const auto layout = parameter_layout(config);
  if (layout.size() != params.size()) {
    throw ShapeError("expected " + std::to_string(layout.size()) + " parameter blocks, found " +
                     std::to_string(params.size()));
  }
  for (const auto& [name, shape] : layout) {
    if (!params.contains(name)) throw ShapeError("missing parameter '" + name + "'");
    const Parameter& p = params.get(name);
    if (p.shape != shape) {
      throw ShapeError("parameter '" + name + "' has shape " + p.shape.str() + ", config needs " + shape.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Layers

struct ConvLayer {
  Var weight;  // (h*k) x n
  Var bias;    // 1 x n
  std::size_t height = 1;
};

struct AttentionLayer {
  Var weight;   // n x a
  Var bias;     // 1 x a
  Var context;  // a x 1, the u_w vector
  bool literal = false;
};

struct Pooled {
  Var vector;                   // 1 x a
  std::vector<double> weights;  // one per input row; empty for max pooling
  bool empty = false;
};

/// Attentive pooling of q rows: z_i = tanh(W c_i + b), alpha = softmax over
/// z_i . u restricted to unmasked rows, s = sum_i alpha_i z_i. All rows
/// masked gives a zero vector flagged empty.
inline Pooled attentive_pool(const Var& rows, const AttentionLayer& att,
                             std::span<const std::uint8_t> mask = {}) {
  Tape& tape = rows.tape();
  const std::size_t q = rows.shape().rows;
  if (q == 0) throw ShapeError("attentive_pool of zero rows");
  Pooled out;
  out.empty = !mask.empty() && std::none_of(mask.begin(), mask.end(), [](auto m) { return m != 0; });
  if (out.empty) {
    out.vector = tape.constant({1, att.weight.shape().cols}, std::vector<double>(att.weight.shape().cols, 0.0));
    out.weights.assign(q, 0.0);
    return out;
  }
  Var z = nn::tanh_op(nn::add_bias(nn::matmul(rows, att.weight), att.bias));
  Var logits = nn::matmul(z, att.context);
  Var alpha = att.literal ? nn::literal_attention_weights(logits, mask) : nn::masked_softmax(logits, mask);
  auto av = alpha.value();
  out.weights.assign(av.begin(), av.end());
  out.vector = nn::matmul(nn::reshape(alpha, {1, q}), z);
  return out;
}

/// Window mask for a length-m sequence with real-token mask `tokens`: a
/// window is real when all its tokens are. A sequence with real tokens but
/// shorter than the window keeps its first window.
inline std::vector<std::uint8_t> window_mask(std::span<const std::uint8_t> tokens, std::size_t h) {
  if (tokens.size() < h) throw ShapeError("sequence shorter than the filter");
  std::vector<std::uint8_t> w(tokens.size() - h + 1, 0);
  bool any_window = false, any_token = false;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = std::all_of(tokens.begin() + static_cast<std::ptrdiff_t>(j),
                       tokens.begin() + static_cast<std::ptrdiff_t>(j + h), [](auto t) { return t != 0; });
    any_window = any_window || w[j];
  }
  for (auto t : tokens) any_token = any_token || t;
  if (!any_window && any_token) w[0] = 1;
  return w;
}

/// Feature maps C = relu(unfold(X) W + b), one row per window.
inline Var convolve(const Var& x, const ConvLayer& conv) {
  return nn::relu(nn::add_bias(nn::matmul(nn::unfold(x, conv.height), conv.weight), conv.bias));
}

/// Attention-based CNN: convolution then attentive pooling over windows.
/// Without an attention layer, max-over-time pooling is used instead.
inline Pooled acnn(const Var& x, std::span<const std::uint8_t> token_mask, const ConvLayer& conv,
                   const AttentionLayer* att) {
  if (x.shape().rows < conv.height) {
    throw ShapeError("acnn: sequence of " + std::to_string(x.shape().rows) + " rows, filter height " +
                     std::to_string(conv.height));
  }
  const auto windows = window_mask(token_mask, conv.height);
  Var c = convolve(x, conv);
  if (att) return attentive_pool(c, *att, windows);
  Pooled out;
  out.empty = std::none_of(windows.begin(), windows.end(), [](auto m) { return m != 0; });
  out.vector = nn::max_rows(c, windows);
  return out;
}

/// m_authors = sum_i gamma_i mask_i a_i.
inline Var encode_authors(Parameter& author_embedding, const Var& gamma, std::span<const std::int32_t> ids,
                          std::span<const std::uint8_t> mask) {
  Tape& tape = gamma.tape();
  if (gamma.shape() != Shape{1, ids.size()} || mask.size() != ids.size()) {
    throw ShapeError("author weights " + gamma.shape().str() + " for " + std::to_string(ids.size()) + " authors");
  }
  std::vector<double> m(mask.begin(), mask.end());
  Var weights = nn::mul(gamma, tape.constant({1, ids.size()}, std::move(m)));
  return nn::matmul(weights, nn::embedding(tape, author_embedding, ids));
}

// ---------------------------------------------------------------------------
// Full model

struct ForwardOptions {
  bool training = false;
  double dropout_rate = 0.0;
  Rng* rng = nullptr;
  /// Extra modules to remove, on top of the config's module_mask.
  ModuleMask extra_mask{};
};

/// Attention weights of one forward pass, laid out over padded positions.
struct AttentionTrace {
  std::vector<double> modules;  // 7 entries
  std::vector<double> title_words;
  std::array<std::vector<double>, kNumTextModules> sentences;
  std::array<std::vector<std::vector<double>>, kNumTextModules> words;
  std::array<bool, kNumModules> present{};
};

struct PaperOutput {
  Var logits;  // 1 x 2
  Var probs;   // 1 x 2
};

class Mhcnn {
 public:
  Mhcnn(ModelConfig config, ParameterSet params) : config_(std::move(config)), params_(std::move(params)) {
    config_.validate();
    check_layout(config_, params_);
  }

  static Mhcnn initialize(const ModelConfig& config, std::uint64_t seed) {
    return Mhcnn(config, init_params(config, seed));
  }

  const ModelConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  /// Parameter leaves for one tape.
  struct Bound {
    ConvLayer word_conv, sentence_conv;
    std::optional<AttentionLayer> word_att, sentence_att, module_att;
    Var gamma, classifier_w, classifier_b;
  };

  Bound bind(Tape& tape) {
    Bound b;
    auto leaf = [&](const char* name) { return tape.param(params_.get(name)); };
    b.word_conv = {leaf("word_conv.weight"), leaf("word_conv.bias"), config_.word_filter_size};
    if (config_.ablation != Ablation::no_module) {
      b.sentence_conv = {leaf("sentence_conv.weight"), leaf("sentence_conv.bias"), config_.sentence_filter_size};
      b.gamma = leaf("author_weights");
    }
    if (config_.ablation == Ablation::full) {
      auto att = [&](const std::string& p) {
        return AttentionLayer{leaf((p + ".weight").c_str()), leaf((p + ".bias").c_str()),
                              leaf((p + ".context").c_str()), config_.literal_attention};
      };
      b.word_att = att("word_attention");
      b.sentence_att = att("sentence_attention");
      b.module_att = att("module_attention");
    }
    b.classifier_w = leaf("classifier.weight");
    b.classifier_b = leaf("classifier.bias");
    return b;
  }

  /// Word-level encoder over the first `length` tokens of `ids`.
  Pooled encode_sentence(Tape& tape, const Bound& b, std::span<const std::int32_t> ids, std::size_t length) {
    const std::size_t h = config_.word_filter_size;
    const std::size_t out_dim = b.word_att ? config_.attention_dim : config_.word_filters;
    if (length == 0) return empty_vector(tape, out_dim);
    // Only real windows need evaluating; the sequence is cut just past them.
    const std::size_t rows = std::max(length, h);
    std::vector<std::uint8_t> tokens(rows, 0);
    std::fill_n(tokens.begin(), length, 1);
    std::vector<std::int32_t> padded;
    if (ids.size() < rows) {
      padded.assign(ids.begin(), ids.end());
      padded.resize(rows, Vocab::kPad);
      ids = padded;
    }
    Var x = nn::embedding(tape, params_.get("word_embedding"), ids.first(rows));
    return acnn(x, tokens, b.word_conv, b.word_att ? &*b.word_att : nullptr);
  }

  /// Module vector m_i for the title.
  Pooled encode_title(Tape& tape, const Bound& b, const EncodedPaper& paper) {
    return encode_sentence(tape, b, paper.title, paper.title_length());
  }

  /// Module vector m_i for a text module: word-level ACNN per sentence, then
  /// a sentence-level ACNN over the sentence vectors.
  Pooled encode_module(Tape& tape, const Bound& b, const EncodedModule& module,
                       std::vector<std::vector<double>>* word_weights = nullptr) {
    const std::size_t width = config_.lengths.words;
    const std::size_t real = module.real_sentences();
    const std::size_t sent_dim = b.word_att ? config_.attention_dim : config_.word_filters;
    const std::size_t out_dim = b.sentence_att ? config_.attention_dim : config_.sentence_filters;
    if (real == 0) return empty_vector(tape, out_dim);
    const std::size_t h = config_.sentence_filter_size;
    const std::size_t rows = std::max(real, h);
    std::vector<Var> sentences;
    sentences.reserve(rows);
    for (std::size_t s = 0; s < real; ++s) {
      Pooled p = encode_sentence(tape, b, std::span(module.ids).subspan(s * width, width), module.lengths[s]);
      if (word_weights) (*word_weights)[s] = expand(p.weights, width - config_.word_filter_size + 1);
      sentences.push_back(p.vector);
    }
    for (std::size_t s = real; s < rows; ++s) {
      sentences.push_back(tape.constant({1, sent_dim}, std::vector<double>(sent_dim, 0.0)));
    }
    std::vector<std::uint8_t> mask(rows, 0);
    std::fill_n(mask.begin(), real, 1);
    return acnn(nn::stack_rows(sentences), mask, b.sentence_conv, b.sentence_att ? &*b.sentence_att : nullptr);
  }

  PaperOutput forward_paper(Tape& tape, const Bound& b, const EncodedPaper& paper, const ForwardOptions& opt,
                            AttentionTrace* trace = nullptr) {
    check_paper(paper);
    ModuleMask removed = config_.module_mask;
    for (std::size_t i = 0; i < kNumModules; ++i) removed[i] = removed[i] || opt.extra_mask[i];

    Var d;
    if (config_.ablation == Ablation::no_module) {
      d = flat_document(tape, b, paper, removed);
    } else {
      d = hierarchical_document(tape, b, paper, removed, trace);
    }
    if (opt.training && opt.dropout_rate > 0.0) {
      if (!opt.rng) throw ConfigError("training forward with dropout needs an rng");
      d = nn::dropout(d, opt.dropout_rate, true, *opt.rng);
    }
    PaperOutput out;
    out.logits = nn::add_bias(nn::matmul(d, b.classifier_w), b.classifier_b);
    out.probs = nn::softmax(out.logits);
    return out;
  }

  /// Mean cross-entropy of a batch, recorded on `tape`.
  Var loss(Tape& tape, std::span<const EncodedPaper> batch, const ForwardOptions& opt) {
    if (batch.empty()) throw ConfigError("loss of an empty batch");
    Bound b = bind(tape);
    std::vector<Var> terms;
    terms.reserve(batch.size());
    for (const auto& paper : batch) {
      PaperOutput o = forward_paper(tape, b, paper, opt);
      terms.push_back(nn::softmax_cross_entropy(o.logits, static_cast<std::size_t>(paper.label)));
    }
    return nn::scale(nn::add_n(terms), 1.0 / static_cast<double>(batch.size()));
  }

  /// Evaluation-mode probabilities (reject, accept) per paper.
  std::vector<std::array<double, 2>> predict(std::span<const EncodedPaper> papers, const ModuleMask& extra = {}) {
    std::vector<std::array<double, 2>> out;
    out.reserve(papers.size());
    ForwardOptions opt;
    opt.extra_mask = extra;
    for (const auto& paper : papers) {
      Tape tape(/*record_gradients=*/false);
      Bound b = bind(tape);
      auto p = forward_paper(tape, b, paper, opt).probs.value();
      out.push_back({p[0], p[1]});
    }
    return out;
  }

  /// Single paper with its attention weights (full mode fills the trace).
  std::pair<std::array<double, 2>, AttentionTrace> explain(const EncodedPaper& paper) {
    Tape tape(false);
    Bound b = bind(tape);
    AttentionTrace trace;
    auto p = forward_paper(tape, b, paper, {}, &trace).probs.value();
    return {{p[0], p[1]}, std::move(trace)};
  }

  void save(std::ostream& out) const { nn::save_parameters(out, params_, to_json(config_).dump()); }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint " + path);
    save(out);
  }

  static Mhcnn load(std::istream& in) {
    auto loaded = nn::load_parameters(in);
    ModelConfig config;
    try {
      config = model_config_from_json(nlohmann::json::parse(loaded.header));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad checkpoint header: ") + e.what());
    }
    return Mhcnn(config, std::move(loaded.params));
  }

  static Mhcnn load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + path);
    return load(in);
  }

 private:
  static Pooled empty_vector(Tape& tape, std::size_t dim) {
    Pooled p;
    p.vector = tape.constant({1, dim}, std::vector<double>(dim, 0.0));
    p.empty = true;
    return p;
  }

  static std::vector<double> expand(const std::vector<double>& w, std::size_t n) {
    std::vector<double> out(n, 0.0);
    std::copy_n(w.begin(), std::min(n, w.size()), out.begin());
    return out;
  }

  void check_paper(const EncodedPaper& paper) const {
    const Lengths& l = config_.lengths;
    if (!(paper.lengths == l) || paper.title.size() != l.words || paper.authors.size() != l.authors) {
      throw ShapeError("paper '" + paper.paper_id + "' was encoded with different lengths than the model");
    }
  }

  Var hierarchical_document(Tape& tape, const Bound& b, const EncodedPaper& paper, const ModuleMask& removed,
                            AttentionTrace* trace) {
    const std::size_t dim = config_.module_dim();
    std::vector<Var> vectors(kNumModules);
    std::vector<std::uint8_t> present(kNumModules, 0);
    const std::size_t wwin = config_.lengths.words - config_.word_filter_size + 1;
    const std::size_t swin = config_.lengths.sentences - config_.sentence_filter_size + 1;
    if (trace) {
      trace->title_words.assign(wwin, 0.0);
      for (std::size_t m = 0; m < kNumTextModules; ++m) {
        trace->sentences[m].assign(swin, 0.0);
        trace->words[m].assign(config_.lengths.sentences, std::vector<double>(wwin, 0.0));
      }
    }
    auto zero = [&] { return tape.constant({1, dim}, std::vector<double>(dim, 0.0)); };

    const auto title_at = static_cast<std::size_t>(Module::title);
    if (!removed[title_at]) {
      Pooled t = encode_title(tape, b, paper);
      vectors[title_at] = t.vector;
      present[title_at] = !t.empty;
      if (trace) trace->title_words = expand(t.weights, wwin);
    }
    const auto authors_at = static_cast<std::size_t>(Module::authors);
    if (!removed[authors_at] && paper.author_count() > 0) {
      vectors[authors_at] = encode_authors(params_.get("author_embedding"), b.gamma, paper.authors, paper.author_mask);
      present[authors_at] = 1;
    }
    for (std::size_t m = 0; m < kNumTextModules; ++m) {
      const std::size_t slot = static_cast<std::size_t>(text_module(m));
      if (removed[slot]) continue;
      Pooled p = encode_module(tape, b, paper.modules[m], trace ? &trace->words[m] : nullptr);
      vectors[slot] = p.vector;
      present[slot] = !p.empty;
      if (trace) trace->sentences[m] = expand(p.weights, swin);
    }
    for (std::size_t i = 0; i < kNumModules; ++i) {
      if (!present[i]) vectors[i] = zero();
      if (trace) trace->present[i] = present[i] != 0;
    }
    Var stacked = nn::stack_rows(vectors);
    if (b.module_att) {
      Pooled doc = attentive_pool(stacked, *b.module_att, present);
      if (trace) trace->modules = doc.weights;
      return doc.vector;
    }
    return nn::max_rows(stacked, present);
  }

  /// Title and text modules concatenated (authors excluded), one word-level
  /// convolution and max-over-time pooling.
  Var flat_document(Tape& tape, const Bound& b, const EncodedPaper& paper, const ModuleMask& removed) {
    std::vector<std::int32_t> ids;
    if (!removed[static_cast<std::size_t>(Module::title)]) {
      for (std::size_t i = 0; i < paper.title.size(); ++i) {
        if (paper.title_mask[i]) ids.push_back(paper.title[i]);
      }
    }
    const std::size_t width = config_.lengths.words;
    for (std::size_t m = 0; m < kNumTextModules; ++m) {
      if (removed[static_cast<std::size_t>(text_module(m))]) continue;
      const EncodedModule& block = paper.modules[m];
      for (std::size_t s = 0; s < block.lengths.size(); ++s) {
        for (std::size_t w = 0; w < block.lengths[s]; ++w) ids.push_back(block.ids[s * width + w]);
      }
    }
    Pooled p = encode_sentence(tape, b, ids, ids.size());
    return p.vector;
  }

  ModelConfig config_;
  ParameterSet params_;
};

}  // namespace model

using model::Mhcnn;

}  // namespace aapr
