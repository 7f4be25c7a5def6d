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

#include <stdexcept>
#include <string>

namespace aapr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed line in a JSONL corpus, vocabulary or checkpoint file.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// LaTeX input that cannot be split into modules at all.
class MalformedSource : public Error {
 public:
  using Error::Error;
};

/// Misuse of a recorded computation (e.g. running backward twice).
class TapeError : public Error {
 public:
  using Error::Error;
};

/// A value became NaN or infinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Training could not continue (non-finite loss, empty split, ...).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace aapr
