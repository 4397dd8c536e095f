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
#include <optional>
#include <span>

#include "convrec/corpus.hpp"
#include "convrec/embedding.hpp"

namespace convrec {

struct RelevanceJudgment {
  ItemId item;
  std::optional<double> estimated_rating;
  bool relevant = false;
  std::size_t admitted_neighbors = 0;
};

// A reference item j admits a candidate when sim >= ε_j and sim > 0. Shared
// by rating estimation and coverage.
inline bool admits(double similarity, double epsilon) noexcept {
  return similarity >= epsilon && similarity > 0.0;
}

// Similarity-weighted mean rating over the admitted reference items, or
// nothing when none is admitted. Throws DataError naming any item that lacks
// an embedding or threshold.
std::optional<double> estimate_rating(const ItemId& item, std::span<const Interaction> reference,
                                      const EmbeddingStore& embeddings,
                                      const QuantileIndex& quantiles);

// relevant iff the estimate exists and is >= 3.
RelevanceJudgment judge(const ItemId& item, std::span<const Interaction> reference,
                        const EmbeddingStore& embeddings, const QuantileIndex& quantiles);

}  // namespace convrec
