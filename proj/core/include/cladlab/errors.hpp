// Copyright 2026 The cladlab Authors
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

namespace cladlab {

// Exception hierarchy. Every error raised by the library derives from Error so
// callers can catch the whole family; the subclasses carry the category that
// the CLI reports in its failure record.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept { return "error"; }
};

// Malformed or unsupported file content (WAV headers, checkpoints).
class FormatError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "format"; }
};

// A caller-supplied argument violates a documented precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "argument"; }
};

// Mathematically undefined request (SNR of a silent signal, zero-norm feature).
class DomainError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "domain"; }
};

class LookupError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "lookup"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "io"; }
};

// Text-format parse failure; line is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  const char* category() const noexcept override { return "parse"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Internal invariant broken (e.g. query/key parameter shapes diverged).
class ConsistencyError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "consistency"; }
};

}  // namespace cladlab
