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

#include <compare>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>

namespace convrec {

// Opaque identifier with a phantom tag so item and user ids never mix.
// Ordering is lexicographic on the underlying string; every "ties broken by
// ascending id" rule in the library uses this ordering.
template <class Tag>
class StrongId {
 public:
  StrongId() = default;
  explicit StrongId(std::string value) : value_(std::move(value)) {}
  explicit StrongId(std::string_view value) : value_(value) {}
  explicit StrongId(const char* value) : value_(value) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const StrongId&, const StrongId&) = default;
  friend bool operator==(const StrongId&, const StrongId&) = default;

 private:
  std::string value_;
};

struct ItemTag {};
struct UserTag {};

using ItemId = StrongId<ItemTag>;
using UserId = StrongId<UserTag>;

}  // namespace convrec

template <class Tag>
struct std::hash<convrec::StrongId<Tag>> {
  std::size_t operator()(const convrec::StrongId<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
