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
#include "tiny.hpp"

using namespace aapr;
using aapr::testing::tiny_config;
using aapr::testing::tiny_data;

namespace {

TrainConfig quick(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 4;
  c.eval_every = 3;
  c.dropout_rate = 0.2;
  c.seed = 9;
  return c;
}

std::vector<std::uint8_t> pattern(std::size_t ones, std::size_t n, bool alternate) {
  std::vector<std::uint8_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = alternate ? (i % 2 == 0) : (i < ones);
  return v;
}

}  // namespace

TEST(Train, ZeroEpochsReturnsInitialModel) {
  auto d = tiny_data(12, 1);
  const auto c = tiny_config(d);
  auto r = train(c, d.encoded, d.encoded, quick(0));
  EXPECT_TRUE(r.history.empty());
  EXPECT_TRUE(r.updates.empty());
  EXPECT_EQ(r.best_val_accuracy, -1.0);
  EXPECT_TRUE(r.best.params().same_values(model::init_params(c, 9)));
}

TEST(Train, EmptySetsAndBadConfigAreRejected) {
  auto d = tiny_data(4, 1);
  const auto c = tiny_config(d);
  EXPECT_THROW(train(c, {}, d.encoded, quick(1)), ConfigError);
  EXPECT_THROW(train(c, d.encoded, {}, quick(1)), ConfigError);
  auto bad = quick(1);
  bad.batch_size = 0;
  EXPECT_THROW(train(c, d.encoded, d.encoded, bad), ConfigError);
}

TEST(Train, IsDeterministic) {
  auto d = tiny_data(20, 2, 0.8);
  const auto c = tiny_config(d);
  auto a = train(c, d.encoded, d.encoded, quick(2));
  auto b = train(c, d.encoded, d.encoded, quick(2));
  EXPECT_TRUE(a.best.params().same_values(b.best.params()));
  std::ostringstream ha, hb;
  write_history_csv(ha, a.history);
  write_history_csv(hb, b.history);
  EXPECT_EQ(ha.str(), hb.str());
  auto cfg = quick(2);
  cfg.seed = 10;
  auto other = train(c, d.encoded, d.encoded, cfg);
  EXPECT_FALSE(other.best.params().same_values(a.best.params()));
}

TEST(Train, ValidatesOnScheduleAndAtTheEnd) {
  auto d = tiny_data(20, 2);
  auto r = train(tiny_config(d), d.encoded, d.encoded, quick(2));
  // 5 updates per epoch, validation after updates 3, 6, 9 and the final 10.
  ASSERT_EQ(r.updates.size(), 10u);
  std::vector<std::size_t> steps;
  for (const auto& h : r.history) steps.push_back(h.step);
  EXPECT_EQ(steps, (std::vector<std::size_t>{3, 6, 9, 10}));
  double best = -1.0;
  std::size_t best_step = 0;
  for (const auto& h : r.history) {
    if (h.val_accuracy > best) best = h.val_accuracy, best_step = h.step;
  }
  EXPECT_EQ(r.best_val_accuracy, best);
  EXPECT_EQ(r.best_step, best_step);
  EXPECT_EQ(evaluate(r.best, d.encoded).accuracy, best);
}

TEST(Train, ClippingIsRecorded) {
  auto d = tiny_data(16, 3);
  auto cfg = quick(1);
  cfg.clip_norm = 1e-3;
  auto r = train(tiny_config(d), d.encoded, d.encoded, cfg);
  for (const auto& u : r.updates) {
    EXPECT_LE(u.clipped_grad_norm, cfg.clip_norm * (1.0 + 1e-9));
    if (u.grad_norm <= cfg.clip_norm) {
      EXPECT_EQ(u.clipped_grad_norm, u.grad_norm);
    }
  }
}

TEST(Train, LossFallsOverEarlyUpdates) {
  auto d = tiny_data(64, 4, 1.0);
  auto cfg = quick(20);
  cfg.batch_size = 8;
  cfg.eval_every = 1000;
  cfg.adam.lr = 0.01;
  auto r = train(tiny_config(d), d.encoded, d.encoded, cfg);
  ASSERT_GE(r.updates.size(), 50u);
  std::vector<double> deltas;
  for (std::size_t i = 10; i < 50; ++i) deltas.push_back(r.updates[i].loss - r.updates[i - 10].loss);
  std::nth_element(deltas.begin(), deltas.begin() + deltas.size() / 2, deltas.end());
  EXPECT_LT(deltas[deltas.size() / 2], 0.0);
}

TEST(Evaluate, RandomInitIsNearChance) {
  auto d = tiny_data(1000, 5);
  auto model = Mhcnn::initialize(tiny_config(d), 3);
  const auto r = evaluate(model, d.encoded);
  EXPECT_EQ(r.n, 1000u);
  EXPECT_NEAR(r.accuracy, 0.5, 0.1);
}

TEST(Evaluate, EmptyMaskMatchesForward) {
  auto d = tiny_data(10, 5);
  auto model = Mhcnn::initialize(tiny_config(d), 3);
  const auto probs = model.predict(d.encoded);
  const auto r = evaluate(model, d.encoded, {});
  for (std::size_t i = 0; i < probs.size(); ++i) EXPECT_EQ(r.predictions[i], probs[i][1] > probs[i][0] ? 1 : 0);
}

TEST(Evaluate, EverythingMaskedPredictsOneClass) {
  auto d = tiny_data(40, 5);
  auto model = Mhcnn::initialize(tiny_config(d), 3);
  model.params().get("classifier.bias").value = {0.0, 1.0};
  ModuleMask all;
  all.fill(true);
  const auto r = evaluate(model, d.encoded, all);
  const auto labels = labels_of(d.encoded);
  EXPECT_EQ(r.accuracy, static_cast<double>(std::count(labels.begin(), labels.end(), 1)) / 40.0);
}

TEST(Evaluate, EmptyDatasetIsConfigError) {
  auto d = tiny_data(2, 5);
  auto model = Mhcnn::initialize(tiny_config(d), 3);
  EXPECT_THROW(evaluate(model, {}), ConfigError);
}

TEST(Baseline, RandomPredictionIsDeterministicAndFair) {
  std::vector<int> labels(10000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  const auto a = rp_baseline(labels, 4), b = rp_baseline(labels, 4);
  EXPECT_EQ(a.predictions, b.predictions);
  EXPECT_NEAR(a.accuracy, 0.5, 0.015);
  EXPECT_NE(rp_baseline(labels, 5).predictions, a.predictions);
}

TEST(Significance, PairedTTest) {
  const auto same = pattern(30, 100, false);
  EXPECT_EQ(significance(same, same), 1.0);
  EXPECT_LT(significance(pattern(100, 100, false), pattern(0, 100, false)), 1e-10);
  // Reference values from scipy.stats.ttest_rel.
  EXPECT_NEAR(significance(pattern(600, 1000, false), pattern(0, 1000, true)), 7.076581249715135e-06, 1e-12);
  EXPECT_NEAR(significance(pattern(30, 50, false), pattern(0, 50, true)), 0.32222340595067556, 1e-12);
}

TEST(Ablation, ReportHasEveryVariant) {
  auto d = tiny_data(24, 6);
  auto r = run_ablation_suite(d.encoded, d.encoded, d.encoded, tiny_config(d), quick(1));
  std::vector<std::string> names;
  for (const auto& row : r.rows) names.push_back(row.variant);
  EXPECT_EQ(names, (std::vector<std::string>{"full", "w/o Attention", "w/o Module", "w/o Title", "w/o Authors",
                                              "w/o Abstract", "w/o Introduction", "w/o Related work", "w/o Methods",
                                              "w/o Conclusion"}));
  const double full = r.row("full").accuracy;
  EXPECT_EQ(r.row("full").decline, 0.0);
  EXPECT_EQ(r.row("full").p_value, 1.0);
  for (const auto& row : r.rows) EXPECT_EQ(row.decline, full - row.accuracy);
  EXPECT_THROW(r.row("w/o Everything"), ConfigError);

  std::ostringstream tsv;
  write_report_tsv(tsv, r);
  const std::string text = tsv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 11);
}

TEST(Ablation, RetrainTrainsWithoutTheModule) {
  auto d = tiny_data(12, 6);
  auto r = run_ablation_suite(d.encoded, d.encoded, d.encoded, tiny_config(d), quick(1), true);
  EXPECT_EQ(r.rows.size(), 10u);
}
