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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aapr/autodiff.hpp"

namespace aapr::nn {

struct BlockCheck {
  std::string name;
  std::size_t elements = 0;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
  /// ||analytic - numeric|| / max(||analytic|| + ||numeric||, floor)
  double relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<BlockCheck> blocks;
  double max_relative_error = 0.0;
  std::string worst_block;
  bool passed = false;
};

/// Builds a scalar loss on the given tape. Must be deterministic: it is
/// re-evaluated for every perturbed parameter entry.
using LossClosure = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double step = 1e-5;
  double norm_floor = 1e-8;
  /// Check at most this many entries per block (evenly strided); 0 = all.
  std::size_t max_entries_per_block = 0;
};

/// Compares reverse-mode gradients against central differences, one
/// parameter block at a time.
inline GradCheckReport grad_check(const LossClosure& loss, std::span<Parameter* const> params,
                                  double tolerance, const GradCheckOptions& opt = {}) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var l = loss(tape);
    tape.backward(l);
  }
  auto evaluate = [&] {
    Tape tape(/*record_gradients=*/false);
    return loss(tape).item();
  };

  GradCheckReport report;
  for (Parameter* p : params) {
    BlockCheck block;
    block.name = p->name;
    const std::size_t n = p->value.size();
    const std::size_t stride =
        opt.max_entries_per_block && n > opt.max_entries_per_block ? n / opt.max_entries_per_block : 1;
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = p->value[i];
      p->value[i] = saved + opt.step;
      const double up = evaluate();
      p->value[i] = saved - opt.step;
      const double down = evaluate();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double analytic = p->grad[i];
      diff_sq += (analytic - numeric) * (analytic - numeric);
      a_sq += analytic * analytic;
      n_sq += numeric * numeric;
      ++block.elements;
    }
    block.analytic_norm = std::sqrt(a_sq);
    block.numeric_norm = std::sqrt(n_sq);
    block.relative_error =
        std::sqrt(diff_sq) / std::max(block.analytic_norm + block.numeric_norm, opt.norm_floor);
    if (block.relative_error >= report.max_relative_error) {
      report.max_relative_error = block.relative_error;
      report.worst_block = block.name;
    }
    report.blocks.push_back(std::move(block));
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace aapr::nn
