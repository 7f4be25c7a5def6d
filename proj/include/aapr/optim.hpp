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

#include <cmath>
#include <span>
#include <vector>

#include "aapr/autodiff.hpp"
#include "aapr/error.hpp"

namespace aapr::nn {

inline double global_norm(std::span<Parameter* const> params) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad) sq += g * g;
  }
  return std::sqrt(sq);
}

/// Rescales all gradients by max_norm / g when their joint L2 norm g exceeds
/// max_norm. Returns the norm before clipping.
inline double clip_global_norm(std::span<Parameter* const> params, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip norm must be positive");
  const double norm = global_norm(params);
  if (norm > max_norm) {
    double s = max_norm / norm;
    // Rounding can leave the scaled norm a few ulps above the limit.
    for (double shrink = 0x1p-52;; shrink *= 2.0) {
      for (Parameter* p : params) {
        for (double& g : p->grad) g *= s;
      }
      const double now = global_norm(params);
      if (now <= max_norm) break;
      s = 1.0 - shrink;
    }
  }
  return norm;
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moments. Moments are created lazily on the first
/// step and must keep matching the parameter shapes afterwards.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {
    if (!(config.lr > 0.0) || !(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
        !(config.beta2 >= 0.0 && config.beta2 < 1.0) || !(config.eps > 0.0)) {
      throw ConfigError("invalid Adam hyperparameters");
    }
  }

  void step(std::span<Parameter* const> params) {
    if (first_.empty()) {
      for (const Parameter* p : params) {
        first_.emplace_back(p->value.size(), 0.0);
        second_.emplace_back(p->value.size(), 0.0);
      }
    }
    if (first_.size() != params.size()) {
      throw ShapeError("Adam state tracks " + std::to_string(first_.size()) + " parameters, got " +
                       std::to_string(params.size()));
    }
    ++steps_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Parameter& p = *params[k];
      auto& m = first_[k];
      auto& v = second_[k];
      if (m.size() != p.value.size() || p.grad.size() != p.value.size()) {
        throw ShapeError("Adam moment shape mismatch for '" + p.name + "'");
      }
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double g = p.grad[i];
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
        const double mhat = m[i] / c1, vhat = v[i] / c2;
        p.value[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
      }
    }
  }

  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<std::vector<double>>& first_moments() const { return first_; }
  const std::vector<std::vector<double>>& second_moments() const { return second_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> first_, second_;
  std::size_t steps_ = 0;
};

}  // namespace aapr::nn
