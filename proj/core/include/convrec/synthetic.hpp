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
#include <unordered_map>
#include <vector>

#include "convrec/corpus.hpp"

namespace convrec {

// A clustered toy movie world: clusters split into sub-clusters that share
// genres, vocabulary, tags and directors, plus boilerplate text common to
// every item. Users love a few sub-clusters, hate others and rate items
// with popularity-weighted exposure.
struct SyntheticCorpusParams {
  std::size_t clusters = 10;
  std::size_t subclusters = 5;
  std::size_t items_per_subcluster = 10;
  std::size_t users = 200;
  int first_year = 1970;
  int last_year = 2015;
  // Ratings per user are uniform on [min_ratings, max_ratings].
  std::size_t min_ratings = 80;
  std::size_t max_ratings = 200;
  // Item exposure ∝ rank^-popularity_exponent over a random item ranking.
  double popularity_exponent = 0.8;
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  Catalog catalog;
  std::vector<Interaction> ratings;
  struct Position {
    std::size_t cluster = 0;
    std::size_t subcluster = 0;
  };
  std::unordered_map<ItemId, Position> positions;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusParams& params = {});

// Writes ratings.tsv, items.tsv and supplement.jsonl in the formats read by
// load_ratings and load_items.
void write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticCorpus& corpus);

}  // namespace convrec
