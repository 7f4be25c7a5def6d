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

#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <string_view>

#include "aapr/error.hpp"
#include "aapr/model.hpp"
#include "aapr/training.hpp"
#include "json.hpp"

namespace aapr {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

inline std::string file_checksum(const std::string& path) { return hex64(fnv1a(read_file(path))); }

/// Everything needed to rerun one training job and check its outputs.
struct RunManifest {
  ModelConfig model;
  TrainConfig train;
  std::map<std::string, std::string> inputs;     // role -> path
  std::map<std::string, std::string> checksums;  // path -> fnv1a hex
  std::map<std::string, std::string> outputs;    // role -> path
  std::map<std::string, std::string> output_checksums;
  std::string version{kToolVersion};

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["version"] = version;
    j["seed"] = train.seed;
    j["model"] = aapr::to_json(model);
    j["train"] = aapr::to_json(train);
    j["inputs"] = inputs;
    j["checksums"] = checksums;
    j["outputs"] = outputs;
    j["output_checksums"] = output_checksums;
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
      m.version = j.at("version");
      m.model = model_config_from_json(j.at("model"));
      m.train = train_config_from_json(j.at("train"));
      m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
      m.checksums = j.at("checksums").get<std::map<std::string, std::string>>();
      m.outputs = j.value("outputs", std::map<std::string, std::string>{});
      m.output_checksums = j.value("output_checksums", std::map<std::string, std::string>{});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad manifest: ") + e.what());
    }
    return m;
  }

  static RunManifest load(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("bad manifest: ") + e.what());
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write manifest " + path);
    out << to_json().dump(2) << '\n';
  }

  /// Throws when an input no longer matches its recorded checksum.
  void verify_inputs() const {
    for (const auto& [role, path] : inputs) {
      auto it = checksums.find(path);
      if (it == checksums.end()) continue;
      const std::string now = file_checksum(path);
      if (now != it->second) {
        throw ConfigError(role + " input " + path + " changed: checksum " + now + ", manifest " + it->second);
      }
    }
  }
};

}  // namespace aapr
