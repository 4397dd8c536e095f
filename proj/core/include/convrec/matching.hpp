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
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "convrec/corpus.hpp"
#include "convrec/types.hpp"

namespace convrec {

// Unit-cost edit distance over Unicode code points (UTF-8 input).
std::size_t levenshtein(std::string_view x, std::string_view y);
std::size_t levenshtein(std::u32string_view x, std::u32string_view y);

// Normalized Levenshtein similarity: 1 - 2·LD / (|x| + |y| + LD), in [0, 1].
// Lengths are in code points; nls("", "") is 1.
double nls(std::string_view x, std::string_view y);

// Lowercase, drop punctuation other than parentheses, collapse whitespace.
std::string canonicalize_title(std::string_view title);

enum class MatchMethod { kExact, kFuzzy, kUnmatched };

std::string_view to_string(MatchMethod method);

struct MatchResult {
  std::string raw_title;
  std::optional<ItemId> matched_item;
  double similarity = 0.0;
  MatchMethod method = MatchMethod::kUnmatched;

  bool matched() const noexcept { return matched_item.has_value(); }
};

// Thread-safe count of titles that failed to match.
class UnmatchedLedger {
 public:
  void record(std::string_view raw_title);
  std::map<std::string, std::size_t> counts() const;
  std::size_t total() const;

  // CSV `raw_title,count` of titles seen at least `min_count` times, by count
  // descending then title.
  void write_review_csv(const std::filesystem::path& path, std::size_t min_count = 3) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t> counts_;
};

// Exact-then-fuzzy title lookup over a fixed title → item map.
class TitleMatcher {
 public:
  explicit TitleMatcher(const std::map<std::string, ItemId>& titles);
  explicit TitleMatcher(const Catalog& catalog);

  // Exact lookup on canonical forms first; otherwise the best NLS candidate,
  // accepted iff NLS >= threshold (ties to the smaller item id). Misses are
  // recorded in `ledger` when given.
  MatchResult match(std::string_view raw, double threshold,
                    UnmatchedLedger* ledger = nullptr) const;

  std::size_t size() const noexcept { return entries_.size(); }

 private:
  struct Entry {
    std::u32string canonical;
    ItemId item;
  };
  void add(std::string_view title, const ItemId& item);
  void finish();

  std::unordered_map<std::string, ItemId> exact_;
  std::vector<Entry> entries_;  // sorted by canonical length
};

MatchResult match_title(std::string_view raw, const TitleMatcher& catalog_index,
                        double title_threshold, UnmatchedLedger* ledger = nullptr);

}  // namespace convrec
