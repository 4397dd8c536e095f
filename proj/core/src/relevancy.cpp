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

#include "convrec/relevancy.hpp"

namespace convrec {

namespace {

struct Sums {
  double weighted = 0.0;
  double weights = 0.0;
  std::size_t admitted = 0;
};

Sums accumulate(const ItemId& item, std::span<const Interaction> reference,
                const EmbeddingStore& embeddings, const QuantileIndex& quantiles) {
  const auto v = embeddings.vector(item);
  Sums sums;
  for (const auto& interaction : reference) {
    const double sim = dot(v, embeddings.vector(interaction.item));
    if (!admits(sim, quantiles.epsilon(interaction.item))) continue;
    sums.weighted += interaction.rating * sim;
    sums.weights += sim;
    ++sums.admitted;
  }
  return sums;
}

}  // namespace

std::optional<double> estimate_rating(const ItemId& item, std::span<const Interaction> reference,
                                      const EmbeddingStore& embeddings,
                                      const QuantileIndex& quantiles) {
  const auto sums = accumulate(item, reference, embeddings, quantiles);
  if (sums.admitted == 0) return std::nullopt;
  return sums.weighted / sums.weights;
}

RelevanceJudgment judge(const ItemId& item, std::span<const Interaction> reference,
                        const EmbeddingStore& embeddings, const QuantileIndex& quantiles) {
  const auto sums = accumulate(item, reference, embeddings, quantiles);
  RelevanceJudgment judgment;
  judgment.item = item;
  judgment.admitted_neighbors = sums.admitted;
  if (sums.admitted > 0) {
    judgment.estimated_rating = sums.weighted / sums.weights;
    // A weighted mean of equal ratings can land one ulp below them.
    judgment.relevant = *judgment.estimated_rating >= kPositiveRating - 1e-12;
  }
  return judgment;
}

}  // namespace convrec
