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
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace convrec {

// Deterministic random source. std::mt19937_64's output sequence is fixed by
// the standard, but the std distributions are not, so all derived draws are
// implemented here to keep runs reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  // Uniform on [0, 1) with 53 bits of precision.
  double uniform01();

  // Standard Gumbel(0, 1) draw.
  double gumbel();

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// 64-bit FNV-1a. Stable across platforms and runs (unlike std::hash).
std::uint64_t stable_hash(std::string_view text) noexcept;

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t value) noexcept;

// Order-sensitive combination of seed components.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept;

}  // namespace convrec
