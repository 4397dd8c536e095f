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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "convrec/types.hpp"

namespace convrec {

inline constexpr double kMinRating = 1.0;
inline constexpr double kMaxRating = 5.0;
// Ratings at or above this value are positive ("liked").
inline constexpr double kPositiveRating = 3.0;

struct Item {
  ItemId id;
  std::string raw_title;
  // "{article} {title} ({year})", the form chat models emit.
  std::string normalized_title;
  int release_year = 0;
  std::vector<std::string> genres;
  // Attribute name -> text (tags, directors, actors, locations, country).
  std::map<std::string, std::string> extra_metadata;
  // Pre-crawled article text.
  std::optional<std::string> supplement_text;
};

struct Interaction {
  UserId user;
  ItemId item;
  double rating = 0.0;

  bool positive() const noexcept { return rating >= kPositiveRating; }
};

// Immutable item collection with id lookup.
class Catalog {
 public:
  Catalog() = default;
  // Throws DataError on duplicate ids or invalid items.
  explicit Catalog(std::vector<Item> items);

  const std::vector<Item>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }

  const Item* find(const ItemId& id) const;
  // Throws DataError naming the id when absent.
  const Item& at(const ItemId& id) const;

  int max_year() const noexcept { return max_year_; }

 private:
  std::vector<Item> items_;
  std::unordered_map<ItemId, std::size_t> index_;
  int max_year_ = 0;
};

struct UserSplit {
  UserId user;
  std::vector<Interaction> example_set;
  std::vector<Interaction> feedback_set;
  std::vector<Interaction> evaluation_set;
};

enum class ContentLevel : int {
  kBasic = 1,         // title, year, genres
  kMetadata = 2,      // + extra attributes
  kSupplemented = 3,  // + article text
  kPruned = 4,        // level 3 minus stop words and the most frequent tokens
};

// Throws ConfigError unless level is in 1..4.
ContentLevel content_level_from_int(int level);

// Corpus token frequencies and the set of tokens pruned from level-4 text.
struct TokenStats {
  std::unordered_map<std::string, std::size_t> frequency;
  // Tokens with frequency >= cutoff_frequency are pruned.
  std::size_t cutoff_frequency = 0;
  std::unordered_set<std::string> pruned;

  bool is_pruned(const std::string& token) const { return pruned.contains(token); }
};

// Either an absolute tuple count or a fraction of the profile (values < 1).
class SplitSize {
 public:
  static SplitSize count(std::size_t n);
  static SplitSize fraction(double f);
  // Values < 1 are fractions, anything else a count.
  static SplitSize from_number(double value);

  std::size_t resolve(std::size_t total) const;
  bool is_fraction() const noexcept { return is_fraction_; }
  double value() const noexcept { return value_; }

 private:
  SplitSize(double value, bool is_fraction) : value_(value), is_fraction_(is_fraction) {}
  double value_;
  bool is_fraction_;
};

struct UserSampling {
  std::size_t count = 50;
  double lo_percentile = 50.0;
  double hi_percentile = 75.0;
  std::size_t min_total = 122;
  std::size_t min_dislikes = 30;
  std::uint64_t seed = 0;
};

// Ratings TSV with header naming userID, itemID (or movieID) and rating.
std::vector<Interaction> load_ratings(const std::filesystem::path& path);

// Items TSV: id, title, year, genres, then optional attribute columns.
// Multi-valued fields are '|'-separated. The supplement file holds one JSON
// object per line: {"item_id": "...", "text": "..."}.
Catalog load_items(const std::filesystem::path& path,
                   const std::optional<std::filesystem::path>& supplement_path = std::nullopt);

// Moves one trailing ", The" / ", A" / ", An" (any case) to the front and
// appends " (year)". A trailing "(year)" already present is replaced.
std::string normalize_title(std::string_view raw_title, int year);

// Lowercase alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

// The bundled English stop-word list.
const std::unordered_set<std::string>& stop_words();

// top_fraction of the distinct tokens (rounded up) by corpus frequency are
// marked; every token tied with the last one at the boundary is marked too.
TokenStats compute_token_stats(std::span<const std::string> documents,
                               double top_fraction = 0.05);

// stats is required only for ContentLevel::kPruned.
std::string build_content_document(const Item& item, ContentLevel level,
                                   const TokenStats* stats = nullptr);

std::vector<UserId> sample_users(std::span<const Interaction> interactions,
                                 const UserSampling& sampling);

// Stratified three-way split. Each set's positive count is the
// largest-remainder share of its size under the profile's positive fraction;
// the feedback set takes what is left. Throws DataError when the profile has
// fewer than two positives or two negatives, or when the example and
// evaluation sets would leave no feedback tuples.
UserSplit split_user(std::span<const Interaction> interactions, SplitSize example_size,
                     SplitSize eval_size, std::uint64_t seed);

// Groups interactions by user, preserving input order within each user.
std::map<UserId, std::vector<Interaction>> group_by_user(
    std::span<const Interaction> interactions);

// Splits file I/O: one JSON object per line per user.
void save_splits(const std::filesystem::path& path, std::span<const UserSplit> splits);
std::vector<UserSplit> load_splits(const std::filesystem::path& path);

// Normalized catalog I/O used between CLI stages.
void save_catalog(const std::filesystem::path& path, const Catalog& catalog);
Catalog load_catalog(const std::filesystem::path& path);

}  // namespace convrec
