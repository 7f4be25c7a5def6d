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
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aapr/error.hpp"
#include "aapr/rng.hpp"

/// Reverse-mode differentiation over dense row-major matrices of doubles.
///
/// A Tape records every operation applied to its variables. Variables are
/// cheap handles; values live on the tape. Learnable arrays are Parameters,
/// which the tape aliases rather than copies, so gradients flow straight into
/// Parameter::grad.
namespace aapr::nn {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const { return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]"; }
};

/// A named learnable array together with its accumulated gradient.
struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;

  Parameter() = default;
  Parameter(std::string n, Shape s)
      : name(std::move(n)), shape(s), value(s.size(), 0.0), grad(s.size(), 0.0) {}

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  inline const Shape& shape() const;
  inline std::span<const double> value() const;
  inline std::span<const double> grad() const;
  inline bool requires_grad() const;
  double item() const { return value()[0]; }
  double at(std::size_t r, std::size_t c) const { return value()[r * shape().cols + c]; }

 private:
  friend class Tape;
  Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(std::span<const double> out_grad)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Shape shape, std::vector<double> values) {
    if (values.size() != shape.size()) {
      throw ShapeError("constant of shape " + shape.str() + " given " +
                       std::to_string(values.size()) + " values");
    }
    return push(Node{shape, std::move(values), {}, nullptr, false, {}});
  }

  Var scalar(double v) { return constant({1, 1}, {v}); }

  /// Leaf aliasing a parameter. Gradients accumulate into `p.grad`.
  Var param(Parameter& p) {
    if (p.value.size() != p.shape.size() || p.grad.size() != p.shape.size()) {
      throw ShapeError("parameter '" + p.name + "' storage does not match " + p.shape.str());
    }
    return push(Node{p.shape, {}, {}, &p, record_, {}});
  }

  /// Records an op result. `backward` runs only if some input needs a gradient.
  Var record(Shape shape, std::vector<double> values, std::initializer_list<Var> inputs,
             Backward backward) {
    bool needs = false;
    for (const Var& v : inputs) needs = needs || nodes_[v.id()].requires_grad;
    return record(shape, std::move(values), needs, std::move(backward));
  }

  Var record(Shape shape, std::vector<double> values, bool needs_grad, Backward backward) {
#ifndef NDEBUG
    for (double x : values) {
      if (!std::isfinite(x)) throw NumericError("non-finite value produced on tape");
    }
#endif
    Node n{shape, std::move(values), {}, nullptr, needs_grad && record_, {}};
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
  }

  const Shape& shape(std::size_t id) const { return nodes_[id].shape; }

  std::span<const double> value(std::size_t id) const {
    const Node& n = nodes_[id];
    if (n.param) return n.param->value;
    return n.value;
  }

  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, allocated on first use.
  std::span<double> grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.param) return n.param->grad;
    if (n.grad.empty()) n.grad.assign(n.shape.size(), 0.0);
    return n.grad;
  }

  std::span<const double> grad(std::size_t id) const {
    const Node& n = nodes_[id];
    if (n.param) return n.param->grad;
    return n.grad;
  }

  /// Reverse sweep from a 1x1 node. A tape can be swept once.
  void backward(const Var& loss) {
    if (&loss.tape() != this) throw TapeError("loss belongs to another tape");
    if (swept_) throw TapeError("backward already ran on this tape; record a new one");
    if (shape(loss.id()) != Shape{1, 1}) throw ShapeError("backward needs a 1x1 loss");
    swept_ = true;
    if (!nodes_[loss.id()].requires_grad) return;
    grad_buffer(loss.id())[0] += 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
      n.backward(n.grad);
    }
  }

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    Parameter* param;
    bool requires_grad;
    Backward backward;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  bool record_;
  bool swept_ = false;
};

inline const Shape& Var::shape() const { return tape_->shape(id_); }
inline std::span<const double> Var::value() const { return tape_->value(id_); }
inline std::span<const double> Var::grad() const { return tape_->grad(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

namespace detail {

inline void same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw TapeError("operands recorded on different tapes");
}

[[noreturn]] inline void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and linear algebra

/// A (r x k) times B (k x c).
inline Var matmul(const Var& a, const Var& b) {
  detail::same_tape(a, b);
  const Shape sa = a.shape(), sb = b.shape();
  if (sa.cols != sb.rows) detail::shape_mismatch("matmul", sa, sb);
  const std::size_t r = sa.rows, k = sa.cols, c = sb.cols;
  auto av = a.value(), bv = b.value();
  std::vector<double> out(r * c, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double* row = &out[i * c];
    for (std::size_t t = 0; t < k; ++t) {
      const double x = av[i * k + t];
      const double* brow = &bv[t * c];
      for (std::size_t j = 0; j < c; ++j) row[j] += x * brow[j];
    }
  }
  Tape& tape = a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record({r, c}, std::move(out), {a, b}, [&tape, ia, ib, r, k, c](auto g) {
    auto av = tape.value(ia), bv = tape.value(ib);
    if (tape.requires_grad(ia)) {
      auto ga = tape.grad_buffer(ia);
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
          double acc = 0.0;
          for (std::size_t j = 0; j < c; ++j) acc += g[i * c + j] * bv[t * c + j];
          ga[i * k + t] += acc;
        }
      }
    }
    if (tape.requires_grad(ib)) {
      auto gb = tape.grad_buffer(ib);
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
          const double x = av[i * k + t];
          for (std::size_t j = 0; j < c; ++j) gb[t * c + j] += x * g[i * c + j];
        }
      }
    }
  });
}

inline Var add(const Var& a, const Var& b) {
  detail::same_tape(a, b);
  if (a.shape() != b.shape()) detail::shape_mismatch("add", a.shape(), b.shape());
  auto av = a.value(), bv = b.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  Tape& tape = a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(a.shape(), std::move(out), {a, b}, [&tape, ia, ib](auto g) {
    for (std::size_t id : {ia, ib}) {
      if (!tape.requires_grad(id)) continue;
      auto gi = tape.grad_buffer(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

/// Adds a 1 x cols row to every row of x.
inline Var add_bias(const Var& x, const Var& bias) {
  detail::same_tape(x, bias);
  const Shape sx = x.shape(), sb = bias.shape();
  if (sb.rows != 1 || sb.cols != sx.cols) detail::shape_mismatch("add_bias", sx, sb);
  auto xv = x.value(), bv = bias.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < sx.rows; ++i) {
    for (std::size_t j = 0; j < sx.cols; ++j) out[i * sx.cols + j] = xv[i * sx.cols + j] + bv[j];
  }
  Tape& tape = x.tape();
  const std::size_t ix = x.id(), ib = bias.id();
  const std::size_t rows = sx.rows, cols = sx.cols;
  return tape.record(sx, std::move(out), {x, bias}, [&tape, ix, ib, rows, cols](auto g) {
    if (tape.requires_grad(ix)) {
      auto gx = tape.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (tape.requires_grad(ib)) {
      auto gb = tape.grad_buffer(ib);
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) gb[j] += g[i * cols + j];
      }
    }
  });
}

/// Elementwise product of equally shaped operands.
inline Var mul(const Var& a, const Var& b) {
  detail::same_tape(a, b);
  if (a.shape() != b.shape()) detail::shape_mismatch("mul", a.shape(), b.shape());
  auto av = a.value(), bv = b.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  Tape& tape = a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(a.shape(), std::move(out), {a, b}, [&tape, ia, ib](auto g) {
    auto av = tape.value(ia), bv = tape.value(ib);
    if (tape.requires_grad(ia)) {
      auto ga = tape.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tape.requires_grad(ib)) {
      auto gb = tape.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

inline Var scale(const Var& x, double s) {
  auto xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * s;
  Tape& tape = x.tape();
  const std::size_t ix = x.id();
  return tape.record(x.shape(), std::move(out), {x}, [&tape, ix, s](auto g) {
    auto gx = tape.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s;
  });
}

inline Var relu(const Var& x) {
  auto xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  Tape& tape = x.tape();
  const std::size_t ix = x.id();
  return tape.record(x.shape(), std::move(out), {x}, [&tape, ix](auto g) {
    auto xv = tape.value(ix);
    auto gx = tape.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += g[i];
    }
  });
}

inline Var tanh_op(const Var& x) {
  auto xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  Tape& tape = x.tape();
  const std::size_t ix = x.id();
  const std::size_t self = tape.size();
  return tape.record(x.shape(), std::move(out), {x}, [&tape, ix, self](auto g) {
    auto y = tape.value(self);
    auto gx = tape.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

/// Same values under a new shape with equal size.
inline Var reshape(const Var& x, Shape shape) {
  if (shape.size() != x.shape().size()) detail::shape_mismatch("reshape", x.shape(), shape);
  auto xv = x.value();
  Tape& tape = x.tape();
  const std::size_t ix = x.id();
  return tape.record(shape, std::vector<double>(xv.begin(), xv.end()), {x}, [&tape, ix](auto g) {
    auto gx = tape.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

inline Var sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value()) acc += v;
  Tape& tape = x.tape();
  const std::size_t ix = x.id();
  return tape.record({1, 1}, {acc}, {x}, [&tape, ix](auto g) {
    auto gx = tape.grad_buffer(ix);
    for (double& v : gx) v += g[0];
  });
}

/// Sum of equally shaped operands.
inline Var add_n(std::span<const Var> xs) {
  if (xs.empty()) throw ShapeError("add_n of nothing");
  Tape& tape = xs[0].tape();
  const Shape s = xs[0].shape();
  std::vector<double> out(s.size(), 0.0);
  std::vector<std::size_t> ids;
  bool needs = false;
  for (const Var& x : xs) {
    detail::same_tape(xs[0], x);
    if (x.shape() != s) detail::shape_mismatch("add_n", s, x.shape());
    auto xv = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += xv[i];
    ids.push_back(x.id());
    needs = needs || x.requires_grad();
  }
  return tape.record(s, std::move(out), needs, [&tape, ids = std::move(ids)](auto g) {
    for (std::size_t id : ids) {
      if (!tape.requires_grad(id)) continue;
      auto gi = tape.grad_buffer(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

/// Stacks 1 x k rows into an n x k matrix.
inline Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows of nothing");
  Tape& tape = rows[0].tape();
  const std::size_t k = rows[0].shape().cols;
  std::vector<double> out;
  out.reserve(rows.size() * k);
  std::vector<std::size_t> ids;
  bool needs = false;
  for (const Var& r : rows) {
    detail::same_tape(rows[0], r);
    if (r.shape() != Shape{1, k}) detail::shape_mismatch("stack_rows", Shape{1, k}, r.shape());
    auto v = r.value();
    out.insert(out.end(), v.begin(), v.end());
    ids.push_back(r.id());
    needs = needs || r.requires_grad();
  }
  return tape.record({rows.size(), k}, std::move(out), needs, [&tape, ids = std::move(ids), k](auto g) {
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (!tape.requires_grad(ids[r])) continue;
      auto gi = tape.grad_buffer(ids[r]);
      for (std::size_t j = 0; j < k; ++j) gi[j] += g[r * k + j];
    }
  });
}

// ---------------------------------------------------------------------------
// Sequence ops

/// Rows of `table` selected by `ids`. The padding id yields a zero row and
/// receives no gradient.
inline Var embedding(Tape& tape, Parameter& table, std::span<const std::int32_t> ids,
                     std::int32_t padding_id = 0) {
  const std::size_t dim = table.shape.cols;
  std::vector<double> out(ids.size() * dim, 0.0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= table.shape.rows) {
      throw ShapeError("embedding id " + std::to_string(id) + " outside table '" + table.name +
                       "' " + table.shape.str());
    }
    if (id == padding_id) continue;
    std::copy_n(&table.value[static_cast<std::size_t>(id) * dim], dim, &out[i * dim]);
  }
  std::vector<std::int32_t> kept(ids.begin(), ids.end());
  return tape.record({ids.size(), dim}, std::move(out), true,
                     [&table, kept = std::move(kept), dim, padding_id](auto g) {
                       for (std::size_t i = 0; i < kept.size(); ++i) {
                         if (kept[i] == padding_id) continue;
                         double* dst = &table.grad[static_cast<std::size_t>(kept[i]) * dim];
                         for (std::size_t j = 0; j < dim; ++j) dst[j] += g[i * dim + j];
                       }
                     });
}

/// Sliding windows of height h: row j of the result is rows j..j+h-1 of x
/// laid end to end, giving an (m-h+1) x (h*k) matrix.
inline Var unfold(const Var& x, std::size_t h) {
  const Shape s = x.shape();
  if (h == 0 || s.rows < h) {
    throw ShapeError("unfold: window height " + std::to_string(h) + " exceeds sequence " + s.str());
  }
  const std::size_t windows = s.rows - h + 1, width = h * s.cols;
  auto xv = x.value();
  std::vector<double> out(windows * width);
  for (std::size_t j = 0; j < windows; ++j) {
    std::copy_n(&xv[j * s.cols], width, &out[j * width]);
  }
  Tape& tape = x.tape();
  const std::size_t ix = x.id(), cols = s.cols;
  return tape.record({windows, width}, std::move(out), {x}, [&tape, ix, windows, width, cols](auto g) {
    auto gx = tape.grad_buffer(ix);
    for (std::size_t j = 0; j < windows; ++j) {
      for (std::size_t t = 0; t < width; ++t) gx[j * cols + t] += g[j * width + t];
    }
  });
}

/// Narrow 1-D convolution of an m x k sequence with one h x k filter and a
/// scalar bias: c_j = sum(W o X[j..j+h-1]) + b. The activation is left to the
/// caller. Returns an (m-h+1) x 1 column.
inline Var conv1d_valid(const Var& x, const Var& filter, const Var& bias) {
  const Shape sx = x.shape(), sw = filter.shape();
  if (sw.cols != sx.cols || sw.rows == 0) detail::shape_mismatch("conv1d_valid", sx, sw);
  if (sx.rows < sw.rows) detail::shape_mismatch("conv1d_valid", sx, sw);
  if (bias.shape() != Shape{1, 1}) detail::shape_mismatch("conv1d_valid bias", bias.shape(), Shape{1, 1});
  return add_bias(matmul(unfold(x, sw.rows), reshape(filter, {sw.size(), 1})), bias);
}

/// Elementwise max over the rows of x whose mask entry is set. Returns 1 x k;
/// zeros when every row is masked.
inline Var max_rows(const Var& x, std::span<const std::uint8_t> mask = {}) {
  const Shape s = x.shape();
  if (!mask.empty() && mask.size() != s.rows) {
    throw ShapeError("max_rows: mask of length " + std::to_string(mask.size()) + " for " + s.str());
  }
  auto xv = x.value();
  std::vector<double> out(s.cols, 0.0);
  std::vector<std::size_t> arg(s.cols, SIZE_MAX);
  for (std::size_t i = 0; i < s.rows; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    for (std::size_t j = 0; j < s.cols; ++j) {
      const double v = xv[i * s.cols + j];
      if (arg[j] == SIZE_MAX || v > out[j]) {
        out[j] = v;
        arg[j] = i;
      }
    }
  }
  Tape& tape = x.tape();
  const std::size_t ix = x.id(), cols = s.cols;
  return tape.record({1, s.cols}, std::move(out), {x}, [&tape, ix, cols, arg = std::move(arg)](auto g) {
    auto gx = tape.grad_buffer(ix);
    for (std::size_t j = 0; j < cols; ++j) {
      if (arg[j] != SIZE_MAX) gx[arg[j] * cols + j] += g[j];
    }
  });
}

/// Softmax over the entries of a vector (1 x q or q x 1), restricted to
/// positions whose mask entry is set. Masked positions get exactly zero; an
/// all-masked input gives all zeros. The result keeps the input shape.
inline Var masked_softmax(const Var& logits, std::span<const std::uint8_t> mask = {}) {
  const Shape s = logits.shape();
  if (s.size() == 0) throw ShapeError("softmax of an empty vector");
  if (s.rows != 1 && s.cols != 1) throw ShapeError("softmax expects a vector, got " + s.str());
  const std::size_t q = s.size();
  if (!mask.empty() && mask.size() != q) {
    throw ShapeError("softmax: mask of length " + std::to_string(mask.size()) + " for " + s.str());
  }
  auto on = [&](std::size_t i) { return mask.empty() || mask[i]; };
  auto lv = logits.value();
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q; ++i) {
    if (on(i)) peak = std::max(peak, lv[i]);
  }
  std::vector<double> out(q, 0.0);
  if (std::isfinite(peak)) {
    double z = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      if (on(i)) z += (out[i] = std::exp(lv[i] - peak));
    }
    for (double& p : out) p /= z;
  }
  Tape& tape = logits.tape();
  const std::size_t il = logits.id(), self = tape.size();
  return tape.record(s, std::move(out), {logits}, [&tape, il, self](auto g) {
    auto p = tape.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += g[i] * p[i];
    auto gl = tape.grad_buffer(il);
    for (std::size_t i = 0; i < p.size(); ++i) gl[i] += p[i] * (g[i] - dot);
  });
}

inline Var softmax(const Var& v) { return masked_softmax(v); }

/// The normalization w_i = l_i / sum_k exp(l_k) over unmasked positions,
/// i.e. an unexponentiated numerator. Kept only for comparison with the
/// softmax path; the weights need not be positive or sum to one.
inline Var literal_attention_weights(const Var& logits, std::span<const std::uint8_t> mask = {}) {
  const Shape s = logits.shape();
  const std::size_t q = s.size();
  if (q == 0 || (s.rows != 1 && s.cols != 1)) throw ShapeError("attention weights need a vector");
  auto on = [&](std::size_t i) { return mask.empty() || mask[i]; };
  auto lv = logits.value();
  double z = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    if (on(i)) z += std::exp(lv[i]);
  }
  std::vector<double> out(q, 0.0);
  if (z > 0.0) {
    for (std::size_t i = 0; i < q; ++i) {
      if (on(i)) out[i] = lv[i] / z;
    }
  }
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  Tape& tape = logits.tape();
  const std::size_t il = logits.id();
  return tape.record(s, std::move(out), {logits}, [&tape, il, z, m = std::move(m)](auto g) {
    if (z <= 0.0) return;
    auto lv = tape.value(il);
    auto on = [&](std::size_t i) { return m.empty() || m[i]; };
    // d w_i / d l_k = [i==k] / z - l_i exp(l_k) / z^2
    double gl_dot = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i) {
      if (on(i)) gl_dot += g[i] * lv[i];
    }
    auto gl = tape.grad_buffer(il);
    for (std::size_t k = 0; k < lv.size(); ++k) {
      if (!on(k)) continue;
      gl[k] += g[k] / z - gl_dot * std::exp(lv[k]) / (z * z);
    }
  });
}

/// -log p[label] for a probability vector.
inline Var cross_entropy(const Var& probs, std::size_t label) {
  const std::size_t q = probs.shape().size();
  if (q == 0) throw ShapeError("cross_entropy of an empty vector");
  if (label >= q) throw ShapeError("label " + std::to_string(label) + " outside " + probs.shape().str());
  const double p = probs.value()[label];
  Tape& tape = probs.tape();
  const std::size_t ip = probs.id();
  return tape.record({1, 1}, {-std::log(p)}, {probs}, [&tape, ip, label, p](auto g) {
    tape.grad_buffer(ip)[label] += -g[0] / p;
  });
}

/// Fused, stable -log softmax(logits)[label].
inline Var softmax_cross_entropy(const Var& logits, std::size_t label) {
  const std::size_t q = logits.shape().size();
  if (q == 0) throw ShapeError("cross_entropy of an empty vector");
  if (label >= q) throw ShapeError("label " + std::to_string(label) + " outside " + logits.shape().str());
  auto lv = logits.value();
  const double peak = *std::max_element(lv.begin(), lv.end());
  double z = 0.0;
  for (double l : lv) z += std::exp(l - peak);
  const double loss = std::log(z) + peak - lv[label];
  std::vector<double> p(q);
  for (std::size_t i = 0; i < q; ++i) p[i] = std::exp(lv[i] - peak) / z;
  Tape& tape = logits.tape();
  const std::size_t il = logits.id();
  return tape.record({1, 1}, {loss}, {logits}, [&tape, il, label, p = std::move(p)](auto g) {
    auto gl = tape.grad_buffer(il);
    for (std::size_t i = 0; i < p.size(); ++i) gl[i] += g[0] * (p[i] - (i == label ? 1.0 : 0.0));
  });
}

/// Inverted dropout: in training each entry is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); otherwise the identity.
inline Var dropout(const Var& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> m(x.shape().size());
  for (double& v : m) v = rng.uniform() < rate ? 0.0 : keep_scale;
  return mul(x, x.tape().constant(x.shape(), std::move(m)));
}

}  // namespace aapr::nn
