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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "aapr/aapr.hpp"
#include "oracles.hpp"
#include "tiny.hpp"

using namespace aapr;
using namespace aapr::nn;
using aapr::model::AttentionLayer;
using aapr::model::ConvLayer;
using aapr::testing::flat;
using aapr::testing::Matrix;
using aapr::testing::pool_oracle;
using aapr::testing::random_matrix;
using aapr::testing::tiny_config;
using aapr::testing::tiny_data;

namespace {

struct PoolCase {
  Matrix c, w;
  std::vector<double> b, u;
};

PoolCase random_case(Rng& rng, std::size_t q, std::size_t n, std::size_t a) {
  PoolCase k{random_matrix(rng, q, n), random_matrix(rng, n, a), {}, {}};
  k.b = flat(random_matrix(rng, 1, a));
  k.u = flat(random_matrix(rng, 1, a));
  return k;
}

AttentionLayer layer(Tape& t, const PoolCase& k) {
  const std::size_t n = k.w.size(), a = k.b.size();
  return {t.constant({n, a}, flat(k.w)), t.constant({1, a}, k.b), t.constant({a, 1}, k.u)};
}

std::vector<double> values(const Var& v) { return {v.value().begin(), v.value().end()}; }

double simplex_sum(const std::vector<double>& w) {
  double s = 0.0;
  for (double v : w) s += v;
  return s;
}

}  // namespace

TEST(AttentivePool, SingleRow) {
  Rng rng(1);
  auto k = random_case(rng, 1, 3, 4);
  Tape t;
  auto p = model::attentive_pool(t.constant({1, 3}, flat(k.c)), layer(t, k));
  ASSERT_EQ(p.weights.size(), 1u);
  EXPECT_EQ(p.weights[0], 1.0);
  for (std::size_t j = 0; j < 4; ++j) {
    double acc = k.b[j];
    for (std::size_t i = 0; i < 3; ++i) acc += k.c[0][i] * k.w[i][j];
    EXPECT_NEAR(p.vector.value()[j], std::tanh(acc), 1e-15);
  }
}

TEST(AttentivePool, IdenticalRowsSplitEvenly) {
  Rng rng(2);
  auto k = random_case(rng, 2, 3, 4);
  k.c[1] = k.c[0];
  Tape t;
  auto p = model::attentive_pool(t.constant({2, 3}, flat(k.c)), layer(t, k));
  EXPECT_EQ(p.weights, (std::vector<double>{0.5, 0.5}));
}

TEST(AttentivePool, MatchesOracleOnRandomCases) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto k = random_case(rng, 4, 8, 5);
    std::vector<std::uint8_t> mask(4, 1);
    if (trial % 3 == 1) mask[rng.below(4)] = 0;
    Tape t;
    auto p = model::attentive_pool(t.constant({4, 8}, flat(k.c)), layer(t, k), mask);
    const auto o = pool_oracle(k.c, k.w, k.b, k.u, mask);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p.weights[i], o.alpha[i], 1e-12);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(p.vector.value()[j], o.s[j], 1e-12);
  }
}

TEST(AttentivePool, AllMaskedIsEmptyZero) {
  Rng rng(4);
  auto k = random_case(rng, 3, 2, 3);
  Tape t;
  auto p = model::attentive_pool(t.constant({3, 2}, flat(k.c)), layer(t, k), std::vector<std::uint8_t>{0, 0, 0});
  EXPECT_TRUE(p.empty);
  EXPECT_EQ(values(p.vector), std::vector<double>(3, 0.0));
}

TEST(AttentivePool, PermutationEquivariant) {
  Rng rng(5);
  auto k = random_case(rng, 2, 3, 4);
  Tape t;
  auto p = model::attentive_pool(t.constant({2, 3}, flat(k.c)), layer(t, k));
  PoolCase swapped = k;
  std::swap(swapped.c[0], swapped.c[1]);
  auto q = model::attentive_pool(t.constant({2, 3}, flat(swapped.c)), layer(t, swapped));
  EXPECT_EQ(q.weights[0], p.weights[1]);
  EXPECT_EQ(q.weights[1], p.weights[0]);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(q.vector.value()[j], p.vector.value()[j], 1e-15);
}

TEST(AttentivePool, LiteralFormCanGoNegative) {
  // Positive and negative scores: the unexponentiated numerator yields a
  // negative weight, which the softmax path never does.
  Tape t;
  AttentionLayer att{t.constant({1, 1}, {5.0}), t.constant({1, 1}, {0.0}), t.constant({1, 1}, {1.0}), true};
  auto p = model::attentive_pool(t.constant({2, 1}, {1.0, -1.0}), att);
  EXPECT_LT(std::min(p.weights[0], p.weights[1]), 0.0);
  att.literal = false;
  auto s = model::attentive_pool(t.constant({2, 1}, {1.0, -1.0}), att);
  EXPECT_GT(std::min(s.weights[0], s.weights[1]), 0.0);
  EXPECT_NEAR(simplex_sum(s.weights), 1.0, 1e-15);
}

TEST(WindowMask, AndOfMemberTokens) {
  EXPECT_EQ(model::window_mask(std::vector<std::uint8_t>{1, 1, 1, 0, 0}, 2), (std::vector<std::uint8_t>{1, 1, 0, 0}));
  EXPECT_EQ(model::window_mask(std::vector<std::uint8_t>{1, 0, 0}, 2), (std::vector<std::uint8_t>{1, 0}));
  EXPECT_EQ(model::window_mask(std::vector<std::uint8_t>{0, 0, 0}, 2), (std::vector<std::uint8_t>{0, 0}));
}

TEST(Acnn, SequenceOfFilterLengthIsSingleRow) {
  Rng rng(6);
  auto k = random_case(rng, 1, 2, 3);
  Tape t;
  const auto xw = flat(random_matrix(rng, 3, 4));
  const auto fw = flat(random_matrix(rng, 12, 2));
  ConvLayer conv{t.constant({12, 2}, fw), t.constant({1, 2}, {0.1, -0.2}), 3};
  auto x = t.constant({3, 4}, xw);
  auto p = model::acnn(x, std::vector<std::uint8_t>{1, 1, 1}, conv, nullptr);
  EXPECT_EQ(p.vector.shape(), (Shape{1, 2}));
  AttentionLayer att = layer(t, k);
  auto q = model::acnn(x, std::vector<std::uint8_t>{1, 1, 1}, conv, &att);
  ASSERT_EQ(q.weights.size(), 1u);
  const auto c = model::convolve(x, conv);
  auto direct = model::attentive_pool(c, att);
  EXPECT_EQ(values(q.vector), values(direct.vector));
}

TEST(Acnn, AllPadSentenceIsEmptyZero) {
  Tape t;
  ConvLayer conv{t.constant({4, 2}, std::vector<double>(8, 0.3)), t.constant({1, 2}, {0.0, 0.0}), 2};
  auto p = model::acnn(t.constant({3, 2}, std::vector<double>(6, 0.0)), std::vector<std::uint8_t>{0, 0, 0}, conv,
                       nullptr);
  EXPECT_TRUE(p.empty);
  EXPECT_EQ(values(p.vector), (std::vector<double>{0, 0}));
}

TEST(Acnn, MatchesComposedOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 5, k = 3, h = 2, n = 4, a = 3;
    const Matrix x = random_matrix(rng, m, k), w = random_matrix(rng, h * k, n);
    const auto bias = flat(random_matrix(rng, 1, n));
    auto pk = random_case(rng, m - h + 1, n, a);
    // naive convolution, one filter per column, then relu
    Matrix c(m - h + 1, std::vector<double>(n));
    for (std::size_t j = 0; j + h <= m; ++j) {
      for (std::size_t f = 0; f < n; ++f) {
        double s = 0.0;
        for (std::size_t r = 0; r < h; ++r) {
          for (std::size_t col = 0; col < k; ++col) s += w[r * k + col][f] * x[j + r][col];
        }
        c[j][f] = std::max(0.0, s + bias[f]);
      }
    }
    std::vector<std::uint8_t> tokens{1, 1, 1, 1, static_cast<std::uint8_t>(trial % 2)};
    const auto o = pool_oracle(c, pk.w, pk.b, pk.u, model::window_mask(tokens, h));
    Tape t;
    ConvLayer conv{t.constant({h * k, n}, flat(w)), t.constant({1, n}, bias), h};
    AttentionLayer att = layer(t, pk);
    auto p = model::acnn(t.constant({m, k}, flat(x)), tokens, conv, &att);
    for (std::size_t j = 0; j < a; ++j) EXPECT_NEAR(p.vector.value()[j], o.s[j], 1e-12);
  }
}

TEST(EncodeAuthors, WeightedSum) {
  Parameter table("author_embedding", {4, 2});
  table.value = {0, 0, 0, 0, 1, 2, 3, 4};
  Tape t;
  auto one = model::encode_authors(table, t.constant({1, 2}, {1.0, 0.5}), std::vector<std::int32_t>{2, 0},
                                   std::vector<std::uint8_t>{1, 0});
  EXPECT_EQ(values(one), (std::vector<double>{1, 2}));
  auto zero = model::encode_authors(table, t.constant({1, 2}, {0.0, 0.0}), std::vector<std::int32_t>{2, 3},
                                    std::vector<std::uint8_t>{1, 1});
  EXPECT_EQ(values(zero), (std::vector<double>{0, 0}));
  auto two = model::encode_authors(table, t.constant({1, 2}, {0.3, 0.7}), std::vector<std::int32_t>{2, 3},
                                   std::vector<std::uint8_t>{1, 1});
  EXPECT_NEAR(two.value()[0], 0.3 * 1 + 0.7 * 3, 1e-15);
  EXPECT_NEAR(two.value()[1], 0.3 * 2 + 0.7 * 4, 1e-15);
}

TEST(Init, DeterministicAndInRange) {
  auto d = tiny_data(8, 1);
  const auto c = tiny_config(d);
  auto a = model::init_params(c, 5), b = model::init_params(c, 5), other = model::init_params(c, 6);
  EXPECT_TRUE(a.same_values(b));
  EXPECT_FALSE(a.same_values(other));
  for (const auto& p : a) {
    for (double v : p.value) {
      if (p.name == "author_weights") {
        EXPECT_EQ(v, 1.0 / static_cast<double>(c.lengths.authors));
      } else if (model::is_bias(p.name)) {
        EXPECT_EQ(v, 0.0) << p.name;
      } else {
        EXPECT_GT(v, -0.08) << p.name;
        EXPECT_LT(v, 0.08) << p.name;
      }
    }
  }
  EXPECT_EQ(a.get("author_weights").value.size(), c.lengths.authors);
}

TEST(Config, ValidationErrors) {
  auto d = tiny_data(4, 1);
  auto c = tiny_config(d);
  c.embed_dim = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config(d);
  c.word_filter_size = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config(d, Ablation::no_attention);
  c.sentence_filters = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config(d);
  EXPECT_EQ(model_config_from_json(to_json(c)).embed_dim, c.embed_dim);
}

TEST(Config, ParameterShapeMismatchFailsAtConstruction) {
  auto d = tiny_data(4, 1);
  const auto c = tiny_config(d);
  auto params = model::init_params(c, 1);
  auto other = c;
  other.attention_dim = 5;
  EXPECT_THROW(Mhcnn(other, params), ShapeError);
  EXPECT_THROW(Mhcnn(tiny_config(d, Ablation::no_module), params), ShapeError);
}

TEST(Model, EncodeModuleSingleSentenceHasOneWindow) {
  auto d = tiny_data(4, 2);
  auto model = Mhcnn::initialize(tiny_config(d), 3);
  PaperRecord r;
  r.text(Module::abstract) = {d.records[0].text(Module::abstract)[1]};
  auto e = encode(r, d.words, d.authors, d.lengths);
  Tape t;
  auto b = model.bind(t);
  auto p = model.encode_module(t, b, e.modules[text_index(Module::abstract)]);
  EXPECT_FALSE(p.empty);
  EXPECT_EQ(p.weights, (std::vector<double>{1.0}));
  auto empty = model.encode_module(t, b, e.modules[text_index(Module::methods)]);
  EXPECT_TRUE(empty.empty);
  EXPECT_EQ(values(empty.vector), std::vector<double>(4, 0.0));
}

TEST(Model, EmptyTitleIsFlagged) {
  auto d = tiny_data(4, 2);
  auto model = Mhcnn::initialize(tiny_config(d), 3);
  EncodedPaper e = encode(PaperRecord{}, d.words, d.authors, d.lengths);
  Tape t;
  auto b = model.bind(t);
  auto p = model.encode_title(t, b, e);
  EXPECT_TRUE(p.empty);
}

TEST(Model, PinnedTinyOutputs) {
  auto d = tiny_data(4, 5);
  auto model = Mhcnn::initialize(tiny_config(d), 11);
  Rng rng(12);
  for (auto& p : model.params()) {
    for (double& v : p.value) v += rng.uniform(-0.5, 0.5);
  }
  Tape t;
  auto b = model.bind(t);
  auto title = model.encode_title(t, b, d.encoded[0]);
  auto module = model.encode_module(t, b, d.encoded[0].modules[text_index(Module::conclusion)]);
  const std::vector<double> title_golden{-0.35733239975278308, -0.3407980253704519, 0.091553687626867872,
                                         0.17347700697741647};
  const std::vector<double> module_golden{0.47368211362788559, -0.58324463082420919, 0.43519435691198238,
                                          -0.39552101666669059};
  ASSERT_EQ(title_golden.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(title.vector.value()[j], title_golden[j], 1e-12);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(module.vector.value()[j], module_golden[j], 1e-12);

  const auto probs = model.predict(std::span(d.encoded).first(2));
  const std::vector<double> probs_golden{0.53307337421644663, 0.52546751073696718};
  EXPECT_NEAR(probs[0][1], probs_golden[0], 1e-12);
  EXPECT_NEAR(probs[1][1], probs_golden[1], 1e-12);

  // Mean cross-entropy by hand from the pinned probabilities.
  auto p_true = [&](std::size_t i) {
    return d.encoded[i].label == 1 ? probs_golden[i] : 1.0 - probs_golden[i];
  };
  const double manual = -(std::log(p_true(0)) + std::log(p_true(1))) / 2.0;
  Tape lt;
  EXPECT_NEAR(model.loss(lt, std::span(d.encoded).first(2), {}).item(), manual, 1e-12);
}

TEST(Model, TitleMatchesComposedOracle) {
  auto d = tiny_data(6, 7);
  auto model = Mhcnn::initialize(tiny_config(d), 13);
  Rng rng(14);
  for (auto& p : model.params()) {
    for (double& v : p.value) v += rng.uniform(-0.5, 0.5);
  }
  const auto& ps = model.params();
  auto as_matrix = [](const Parameter& p) {
    Matrix m(p.shape.rows, std::vector<double>(p.shape.cols));
    for (std::size_t r = 0; r < p.shape.rows; ++r) {
      for (std::size_t c = 0; c < p.shape.cols; ++c) m[r][c] = p.value[r * p.shape.cols + c];
    }
    return m;
  };
  const Matrix emb = as_matrix(ps.get("word_embedding")), w = as_matrix(ps.get("word_conv.weight"));
  const auto bias = ps.get("word_conv.bias").value;
  const std::size_t h = 3, k = 8, n = 4;
  for (const auto& paper : d.encoded) {
    const std::size_t m = paper.title.size();
    Matrix c(m - h + 1, std::vector<double>(n));
    for (std::size_t j = 0; j + h <= m; ++j) {
      for (std::size_t f = 0; f < n; ++f) {
        double acc = 0.0;
        for (std::size_t r = 0; r < h; ++r) {
          for (std::size_t col = 0; col < k; ++col) {
            acc += w[r * k + col][f] * emb[static_cast<std::size_t>(paper.title[j + r])][col];
          }
        }
        c[j][f] = std::max(0.0, acc + bias[f]);
      }
    }
    const auto o = pool_oracle(c, as_matrix(ps.get("word_attention.weight")), ps.get("word_attention.bias").value,
                               ps.get("word_attention.context").value, model::window_mask(paper.title_mask, h));
    Tape t;
    auto b = model.bind(t);
    auto p = model.encode_title(t, b, paper);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(p.vector.value()[j], o.s[j], 1e-12);
  }
}

class ModelModes : public ::testing::TestWithParam<Ablation> {};

TEST_P(ModelModes, ProbabilitiesFormSimplex) {
  auto d = tiny_data(30, 3, 0.7);
  auto model = Mhcnn::initialize(tiny_config(d, GetParam()), 4);
  Rng rng(8);
  for (auto& p : model.params()) {
    for (double& v : p.value) v += rng.uniform(-0.5, 0.5);
  }
  for (const auto& pr : model.predict(d.encoded)) {
    EXPECT_NEAR(pr[0] + pr[1], 1.0, 1e-9);
    EXPECT_GT(pr[0], 0.0);
    EXPECT_GT(pr[1], 0.0);
  }
}

TEST_P(ModelModes, MaskingEverythingLeavesBias) {
  auto d = tiny_data(10, 3);
  auto model = Mhcnn::initialize(tiny_config(d, GetParam()), 4);
  model.params().get("classifier.bias").value = {0.3, -0.4};
  ModuleMask all;
  all.fill(true);
  Tape t;
  auto expect = softmax(t.constant({1, 2}, {0.3, -0.4}));
  for (const auto& pr : model.predict(d.encoded, all)) {
    EXPECT_NEAR(pr[0], expect.value()[0], 1e-15);
    EXPECT_NEAR(pr[1], expect.value()[1], 1e-15);
  }
}

TEST_P(ModelModes, CheckpointRoundTripIsExact) {
  auto d = tiny_data(6, 3);
  auto model = Mhcnn::initialize(tiny_config(d, GetParam()), 4);
  std::stringstream io;
  model.save(io);
  auto back = Mhcnn::load(io);
  EXPECT_TRUE(back.params().same_values(model.params()));
  EXPECT_EQ(to_json(back.config()), to_json(model.config()));
  EXPECT_EQ(back.predict(d.encoded), model.predict(d.encoded));
}

INSTANTIATE_TEST_SUITE_P(AllModes, ModelModes,
                         ::testing::Values(Ablation::full, Ablation::no_attention, Ablation::no_module),
                         [](const auto& info) { return std::string(ablation_name(info.param)); });

TEST(Model, LossOfUniformPredictionIsLn2) {
  auto d = tiny_data(4, 3);
  auto model = Mhcnn::initialize(tiny_config(d), 4);
  std::fill(model.params().get("classifier.weight").value.begin(), model.params().get("classifier.weight").value.end(), 0.0);
  Tape t;
  EXPECT_NEAR(model.loss(t, d.encoded, {}).item(), std::log(2.0), 1e-15);
}

TEST(Model, ConfidentCorrectPredictionHasNearZeroLoss) {
  auto d = tiny_data(4, 3);
  auto model = Mhcnn::initialize(tiny_config(d), 4);
  std::fill(model.params().get("classifier.weight").value.begin(), model.params().get("classifier.weight").value.end(), 0.0);
  const auto& paper = d.encoded[0];
  model.params().get("classifier.bias").value = paper.label == 1 ? std::vector<double>{-30, 30} : std::vector<double>{30, -30};
  Tape t;
  EXPECT_LT(model.loss(t, std::span(d.encoded).first(1), {}).item(), 1e-20);
}

TEST(Model, EmptyBatchIsConfigError) {
  auto d = tiny_data(4, 3);
  auto model = Mhcnn::initialize(tiny_config(d), 4);
  Tape t;
  EXPECT_THROW(model.loss(t, {}, {}), ConfigError);
}

TEST(Model, NoModuleHasNoAttentionParameters) {
  auto d = tiny_data(6, 3);
  auto model = Mhcnn::initialize(tiny_config(d, Ablation::no_module), 4);
  for (const auto& p : model.params()) {
    EXPECT_EQ(p.name.find("attention"), std::string::npos) << p.name;
    EXPECT_EQ(p.name.find("author"), std::string::npos) << p.name;
  }
  auto na = Mhcnn::initialize(tiny_config(d, Ablation::no_attention), 4);
  for (const auto& p : na.params()) EXPECT_EQ(p.name.find("attention"), std::string::npos) << p.name;
}

TEST(Model, ModuleMaskEqualsMaskedSlot) {
  auto d = tiny_data(12, 6, 0.8);
  auto model = Mhcnn::initialize(tiny_config(d), 4);
  Rng rng(2);
  for (auto& p : model.params()) {
    for (double& v : p.value) v += rng.uniform(-0.3, 0.3);
  }
  for (std::size_t m = 0; m < kNumModules; ++m) {
    const auto removed = static_cast<Module>(m);
    const auto masked = model.predict(d.encoded, mask_of({removed}));
    for (std::size_t i = 0; i < d.encoded.size(); ++i) {
      const EncodedPaper& paper = d.encoded[i];
      Tape t;
      auto b = model.bind(t);
      std::vector<Var> rows;
      std::vector<std::uint8_t> slot(kNumModules, 1);
      auto title = model.encode_title(t, b, paper);
      rows.push_back(title.vector);
      slot[0] = !title.empty;
      rows.push_back(model::encode_authors(model.params().get("author_embedding"), b.gamma, paper.authors,
                                           paper.author_mask));
      slot[1] = paper.author_count() > 0;
      for (std::size_t k = 0; k < kNumTextModules; ++k) {
        auto p = model.encode_module(t, b, paper.modules[k]);
        rows.push_back(p.vector);
        slot[k + 2] = !p.empty;
      }
      slot[m] = 0;
      auto doc = model::attentive_pool(stack_rows(rows), *b.module_att, slot);
      auto probs = softmax(add_bias(matmul(doc.vector, b.classifier_w), b.classifier_b));
      EXPECT_NEAR(masked[i][1], probs.value()[1], 1e-12) << module_name(removed) << " paper " << i;
    }
  }
}

TEST(Model, ExplainTracesAreSimplices) {
  auto d = tiny_data(10, 4, 0.8, {6, 5, 3});
  auto model = Mhcnn::initialize(tiny_config(d), 4);
  for (const auto& paper : d.encoded) {
    auto [probs, trace] = model.explain(paper);
    EXPECT_NEAR(probs[0] + probs[1], 1.0, 1e-12);
    EXPECT_NEAR(simplex_sum(trace.modules), 1.0, 1e-9);
    EXPECT_NEAR(simplex_sum(trace.title_words), 1.0, 1e-9);
    for (std::size_t m = 0; m < kNumTextModules; ++m) {
      EXPECT_NEAR(simplex_sum(trace.sentences[m]), 1.0, 1e-9);
      const std::size_t real = paper.modules[m].real_sentences();
      for (std::size_t s = 0; s < d.lengths.sentences; ++s) {
        EXPECT_NEAR(simplex_sum(trace.words[m][s]), s < real ? 1.0 : 0.0, 1e-9);
      }
    }
  }
}
