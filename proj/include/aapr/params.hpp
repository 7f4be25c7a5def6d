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

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "aapr/autodiff.hpp"
#include "aapr/error.hpp"

namespace aapr::nn {

/// Ordered collection of named parameters with stable addresses.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet& o) { *this = o; }
  ParameterSet& operator=(const ParameterSet& o) {
    if (this == &o) return *this;
    params_.clear();
    index_.clear();
    for (const auto& p : o.params_) add(p);
    return *this;
  }
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  Parameter& add(std::string name, Shape shape) { return add(Parameter(std::move(name), shape)); }

  Parameter& add(Parameter p) {
    if (index_.contains(p.name)) throw ConfigError("duplicate parameter '" + p.name + "'");
    params_.push_back(std::move(p));
    index_[params_.back().name] = params_.size() - 1;
    return params_.back();
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  Parameter& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("no parameter named '" + name + "'");
    return params_[it->second];
  }
  const Parameter& get(const std::string& name) const {
    return const_cast<ParameterSet*>(this)->get(name);
  }

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::vector<Parameter*> pointers() {
    std::vector<Parameter*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  /// Values, names and shapes equal (gradients ignored).
  bool same_values(const ParameterSet& o) const {
    if (size() != o.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto &a = params_[i], &b = o.params_[i];
      if (a.name != b.name || a.shape != b.shape) return false;
      if (std::memcmp(a.value.data(), b.value.data(), a.value.size() * sizeof(double)) != 0) return false;
    }
    return true;
  }

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Binary parameter manifest
//
//   "AAPRPARM" | u32 version | u64 header_len | header bytes (opaque, e.g.
//   JSON config) | u64 count | count x { u64 name_len | name | u64 rows |
//   u64 cols | rows*cols little-endian IEEE-754 doubles }

inline constexpr char kManifestMagic[8] = {'A', 'A', 'P', 'R', 'P', 'A', 'R', 'M'};
inline constexpr std::uint32_t kManifestVersion = 1;

static_assert(std::endian::native == std::endian::little, "manifest I/O assumes little-endian");

namespace detail {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("truncated parameter file");
  return v;
}

inline std::string take_string(std::istream& in, std::uint64_t max_len = 1u << 30) {
  const auto n = take<std::uint64_t>(in);
  if (n > max_len) throw ParseError("implausible string length in parameter file");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw ParseError("truncated parameter file");
  return s;
}

}  // namespace detail

inline void save_parameters(std::ostream& out, const ParameterSet& params, const std::string& header) {
  out.write(kManifestMagic, sizeof kManifestMagic);
  detail::put(out, kManifestVersion);
  detail::put<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  detail::put<std::uint64_t>(out, params.size());
  for (const auto& p : params) {
    detail::put<std::uint64_t>(out, p.name.size());
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    detail::put<std::uint64_t>(out, p.shape.rows);
    detail::put<std::uint64_t>(out, p.shape.cols);
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) throw ConfigError("failed writing parameters");
}

struct LoadedParameters {
  std::string header;
  ParameterSet params;
};

inline LoadedParameters load_parameters(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kManifestMagic, sizeof magic) != 0) {
    throw ParseError("not a parameter file");
  }
  if (const auto v = detail::take<std::uint32_t>(in); v != kManifestVersion) {
    throw ParseError("unsupported parameter file version " + std::to_string(v));
  }
  LoadedParameters out;
  out.header = detail::take_string(in);
  const auto count = detail::take<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = detail::take_string(in, 4096);
    const auto rows = detail::take<std::uint64_t>(in);
    const auto cols = detail::take<std::uint64_t>(in);
    if (rows > (1u << 28) || cols > (1u << 28) || rows * cols > (1ull << 32)) {
      throw ParseError("implausible shape for '" + name + "'");
    }
    Parameter p(std::move(name), {rows, cols});
    if (!in.read(reinterpret_cast<char*>(p.value.data()),
                 static_cast<std::streamsize>(p.value.size() * sizeof(double)))) {
      throw ParseError("truncated values for '" + p.name + "'");
    }
    out.params.add(std::move(p));
  }
  return out;
}

}  // namespace aapr::nn
