/*
 * Copyright 2026 The convrec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "convrec/types.hpp"

namespace convrec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (missing keys, out-of-range parameters,
// missing credentials). The CLI maps this to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. line() is 1-based; 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Inputs that parse but violate a data contract (duplicates, missing
// embeddings, profiles too small to split, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class RemoteError : public Error {
 public:
  using Error::Error;
};

// 401/403 from a remote endpoint. Never retried.
class AuthenticationError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

class EmbeddingError : public RemoteError {
 public:
  EmbeddingError(const std::string& what, std::vector<ItemId> failed)
      : RemoteError(what), failed_(std::move(failed)) {}
  const std::vector<ItemId>& failed_items() const noexcept { return failed_; }

 private:
  std::vector<ItemId> failed_;
};

// A completion that contains no numbered list.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

}  // namespace convrec
