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
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "aapr/autodiff.hpp"
#include "aapr/error.hpp"
#include "aapr/model.hpp"
#include "aapr/optim.hpp"
#include "aapr/rng.hpp"
#include "aapr/vocab.hpp"

namespace aapr {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  std::size_t eval_every = 50;
  double clip_norm = 5.0;
  double dropout_rate = 0.5;
  std::uint64_t seed = 1;
  nn::AdamConfig adam;

  void validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (eval_every == 0) throw ConfigError("eval_every must be at least 1");
    if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"epochs", c.epochs},       {"eval_every", c.eval_every},
          {"clip_norm", c.clip_norm},   {"dropout", c.dropout_rate}, {"seed", c.seed},
          {"lr", c.adam.lr},            {"beta1", c.adam.beta1},     {"beta2", c.adam.beta2},
          {"eps", c.adam.eps}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size");
  c.epochs = j.at("epochs");
  c.eval_every = j.at("eval_every");
  c.clip_norm = j.at("clip_norm");
  c.dropout_rate = j.at("dropout");
  c.seed = j.at("seed");
  c.adam.lr = j.at("lr");
  c.adam.beta1 = j.at("beta1");
  c.adam.beta2 = j.at("beta2");
  c.adam.eps = j.at("eps");
  return c;
}

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::uint8_t> correct;
  std::vector<int> predictions;
  std::size_t n = 0;
};

inline EvalResult score(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ShapeError("predictions and labels differ in length");
  if (labels.empty()) throw ConfigError("cannot evaluate an empty dataset");
  EvalResult r;
  r.n = labels.size();
  r.predictions.assign(predictions.begin(), predictions.end());
  r.correct.resize(r.n);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < r.n; ++i) hits += r.correct[i] = predictions[i] == labels[i];
  r.accuracy = static_cast<double>(hits) / static_cast<double>(r.n);
  return r;
}

inline std::vector<int> labels_of(std::span<const EncodedPaper> data) {
  std::vector<int> out;
  out.reserve(data.size());
  for (const auto& p : data) out.push_back(p.label);
  return out;
}

/// Accuracy with dropout off; prediction is the likelier class (ties
/// reject). `mask` removes modules on top of the model's own mask.
inline EvalResult evaluate(Mhcnn& model, std::span<const EncodedPaper> data, const ModuleMask& mask = {}) {
  if (data.empty()) throw ConfigError("cannot evaluate an empty dataset");
  const auto probs = model.predict(data, mask);
  std::vector<int> predictions;
  predictions.reserve(probs.size());
  for (const auto& p : probs) predictions.push_back(p[1] > p[0] ? 1 : 0);
  return score(predictions, labels_of(data));
}

/// Random prediction: a fair coin per paper.
inline EvalResult rp_baseline(std::span<const int> labels, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> predictions(labels.size());
  for (int& p : predictions) p = rng.bernoulli(0.5) ? 1 : 0;
  return score(predictions, labels);
}

/// Two-sided paired t-test on per-example correctness. Identical vectors
/// give p = 1; a constant nonzero difference gives p = 0.
inline double significance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) {
    throw ShapeError("paired vectors differ in length: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  const std::size_t n = a.size();
  if (n == 0) return 1.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += double(a[i]) - double(b[i]);
  mean /= double(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = double(a[i]) - double(b[i]) - mean;
    ss += d * d;
  }
  if (n < 2 || ss == 0.0) return mean == 0.0 ? 1.0 : 0.0;
  const double se = std::sqrt(ss / double(n - 1) / double(n));
  const double t = mean / se;
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

struct HistoryEntry {
  std::size_t step = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct UpdateRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;          // before clipping
  double clipped_grad_norm = 0.0;  // after clipping
};

struct TrainResult {
  Mhcnn best;
  double best_val_accuracy = -1.0;  // -1 when no validation ran
  std::size_t best_step = 0;
  std::vector<HistoryEntry> history;
  std::vector<UpdateRecord> updates;
};

/// Mini-batch Adam training with global-norm clipping. Validation runs every
/// `eval_every` updates and once more after the last update; the parameters
/// with the highest validation accuracy are kept (earliest on ties).
inline TrainResult train(const ModelConfig& model_config, std::span<const EncodedPaper> train_set,
                         std::span<const EncodedPaper> val_set, const TrainConfig& config,
                         const std::function<void(const HistoryEntry&)>& on_eval = {}) {
  config.validate();
  if (train_set.empty() || val_set.empty()) throw ConfigError("training and validation sets must be non-empty");
  Mhcnn model = Mhcnn::initialize(model_config, config.seed);
  TrainResult result{model, -1.0, 0, {}, {}};
  if (config.epochs == 0) return result;

  nn::Adam adam(config.adam);
  Rng rng(config.seed ^ 0x5DEECE66DULL);
  auto params = model.params().pointers();
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  std::size_t step = 0, pending = 0;
  double loss_sum = 0.0;
  auto validate = [&] {
    HistoryEntry h{step, pending ? loss_sum / double(pending) : 0.0, evaluate(model, val_set).accuracy};
    result.history.push_back(h);
    loss_sum = 0.0;
    pending = 0;
    if (h.val_accuracy > result.best_val_accuracy) {
      result.best = model;
      result.best_val_accuracy = h.val_accuracy;
      result.best_step = step;
    }
    if (on_eval) on_eval(h);
  };

  std::vector<EncodedPaper> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);

      model.params().zero_grad();
      nn::Tape tape;
      model::ForwardOptions opt;
      opt.training = true;
      opt.dropout_rate = config.dropout_rate;
      opt.rng = &rng;
      nn::Var loss = model.loss(tape, batch, opt);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        std::string ids;
        for (const auto& p : batch) ids += (ids.empty() ? "" : ",") + p.paper_id;
        throw TrainingError("non-finite loss at update " + std::to_string(step + 1) + " (epoch " +
                            std::to_string(epoch) + ", batch starting at " + std::to_string(start) +
                            ", papers " + ids + ")");
      }
      tape.backward(loss);
      const double norm = nn::clip_global_norm(params, config.clip_norm);
      const double clipped = nn::global_norm(params);
      adam.step(params);
      ++step;
      result.updates.push_back({step, value, norm, clipped});
      loss_sum += value;
      ++pending;
      if (step % config.eval_every == 0) validate();
    }
  }
  if (step % config.eval_every != 0) validate();
  return result;
}

inline void write_history_csv(std::ostream& out, const std::vector<HistoryEntry>& history) {
  out << "step,train_loss,val_accuracy\n";
  char buf[96];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", h.step, h.train_loss, h.val_accuracy);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Ablations

struct AblationRow {
  std::string variant;
  double accuracy = 0.0;
  double decline = 0.0;
  double p_value = 1.0;
  std::vector<std::uint8_t> correct;
};

struct AblationReport {
  std::vector<AblationRow> rows;

  const AblationRow& row(std::string_view variant) const {
    for (const auto& r : rows) {
      if (r.variant == variant) return r;
    }
    throw ConfigError("no ablation row '" + std::string(variant) + "'");
  }
};

inline std::string removal_label(Module m) {
  static constexpr std::array<std::string_view, kNumModules> labels = {
      "w/o Title", "w/o Authors", "w/o Abstract", "w/o Introduction", "w/o Related work", "w/o Methods",
      "w/o Conclusion",
  };
  return std::string(labels[static_cast<std::size_t>(m)]);
}

/// Trains the full model and both structural ablations, then removes each
/// module in turn: by masking the trained full model at test time, or with
/// `retrain` by training a fresh model that never sees the module.
inline AblationReport run_ablation_suite(std::span<const EncodedPaper> train_set,
                                         std::span<const EncodedPaper> val_set,
                                         std::span<const EncodedPaper> test_set, ModelConfig base,
                                         const TrainConfig& config, bool retrain = false,
                                         const std::function<void(const std::string&)>& progress = {}) {
  base.module_mask = {};
  auto note = [&](const std::string& s) {
    if (progress) progress(s);
  };
  AblationReport report;
  auto add_row = [&](std::string variant, EvalResult r) {
    AblationRow row{std::move(variant), r.accuracy, 0.0, 1.0, std::move(r.correct)};
    report.rows.push_back(std::move(row));
    note(report.rows.back().variant);
  };

  ModelConfig full_config = base;
  full_config.ablation = Ablation::full;
  TrainResult full = train(full_config, train_set, val_set, config);
  add_row("full", evaluate(full.best, test_set));

  ModelConfig no_att = base;
  no_att.ablation = Ablation::no_attention;
  TrainResult na = train(no_att, train_set, val_set, config);
  add_row("w/o Attention", evaluate(na.best, test_set));

  ModelConfig no_mod = base;
  no_mod.ablation = Ablation::no_module;
  TrainResult nm = train(no_mod, train_set, val_set, config);
  add_row("w/o Module", evaluate(nm.best, test_set));

  for (std::size_t i = 0; i < kNumModules; ++i) {
    const auto m = static_cast<Module>(i);
    if (retrain) {
      ModelConfig c = full_config;
      c.module_mask = mask_of({m});
      TrainResult r = train(c, train_set, val_set, config);
      add_row(removal_label(m), evaluate(r.best, test_set));
    } else {
      add_row(removal_label(m), evaluate(full.best, test_set, mask_of({m})));
    }
  }

  const AblationRow& reference = report.rows.front();
  for (auto& row : report.rows) {
    row.decline = reference.accuracy - row.accuracy;
    row.p_value = significance(reference.correct, row.correct);
  }
  return report;
}

inline void write_report_tsv(std::ostream& out, const AblationReport& report) {
  out << "variant\taccuracy\tdecline\tp_value\n";
  char buf[160];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s\t%.6f\t%.6f\t%.6g\n", r.variant.c_str(), r.accuracy, r.decline, r.p_value);
    out << buf;
  }
}

}  // namespace aapr
