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

#include "convrec/metrics.hpp"

#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

#include "convrec/error.hpp"
#include "convrec/relevancy.hpp"

namespace convrec {

namespace {

double discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

}  // namespace

std::optional<double> precision(const RankedList& list) {
  if (list.items.empty()) return std::nullopt;
  std::size_t relevant = 0;
  for (const auto& item : list.items) relevant += item.relevant ? 1 : 0;
  return static_cast<double>(relevant) / static_cast<double>(list.items.size());
}

std::optional<double> ndcg(const RankedList& list) {
  if (list.items.empty()) return std::nullopt;
  double dcg = 0.0;
  std::size_t relevant = 0;
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    if (!list.items[i].relevant) continue;
    dcg += discount(i + 1);
    ++relevant;
  }
  if (relevant == 0) return 0.0;
  double ideal = 0.0;
  for (std::size_t i = 0; i < relevant; ++i) ideal += discount(i + 1);
  return std::min(1.0, dcg / ideal);
}

std::optional<double> average_precision(const RankedList& list) {
  if (list.items.empty()) return std::nullopt;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    if (!list.items[i].relevant) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

std::optional<double> ils(std::span<const std::span<const double>> vectors) {
  const std::size_t n = vectors.size();
  if (n < 2) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sum += cosine_sim(vectors[i], vectors[j]);
  }
  return sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

std::optional<double> ils(const EmbeddingStore& store, std::span<const ItemId> items) {
  std::vector<std::span<const double>> vectors;
  vectors.reserve(items.size());
  for (const auto& item : items) vectors.push_back(store.vector(item));
  return ils(vectors);
}

double coverage(std::span<const ItemId> recommendations, std::span<const Interaction> reference,
                const EmbeddingStore& embeddings, const QuantileIndex& quantiles) {
  if (reference.empty()) return 0.0;
  std::vector<std::span<const double>> recs;
  std::unordered_set<ItemId> seen;
  for (const auto& item : recommendations) {
    if (seen.insert(item).second) recs.push_back(embeddings.vector(item));
  }
  std::unordered_set<ItemId> counted;
  std::size_t covered = 0;
  for (const auto& interaction : reference) {
    if (!counted.insert(interaction.item).second) continue;
    const auto v = embeddings.vector(interaction.item);
    const double epsilon = quantiles.epsilon(interaction.item);
    for (const auto& r : recs) {
      if (admits(dot(r, v), epsilon)) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(counted.size());
}

std::unordered_map<ItemId, double> popularity_table(
    std::span<const std::vector<ItemId>> sessions) {
  std::unordered_map<ItemId, double> table;
  if (sessions.empty()) return table;
  std::unordered_map<ItemId, std::size_t> occurrences;
  for (const auto& session : sessions) {
    std::unordered_set<ItemId> unique(session.begin(), session.end());
    for (const auto& item : unique) ++occurrences[item];
  }
  const auto total = static_cast<double>(sessions.size());
  for (const auto& [item, n] : occurrences) table.emplace(item, static_cast<double>(n) / total);
  return table;
}

double novelty(std::span<const ItemId> recommendations,
               const std::unordered_map<ItemId, double>& popularity, std::size_t slots) {
  if (slots == 0) throw DataError("novelty needs at least one recommendation slot");
  if (recommendations.size() > slots) {
    throw DataError(fmt::format("{} recommendations exceed {} slots", recommendations.size(),
                                slots));
  }
  double sum = 0.0;
  for (const auto& item : recommendations) {
    const auto it = popularity.find(item);
    sum += 1.0 - (it == popularity.end() ? 0.0 : it->second);
  }
  return sum / static_cast<double>(slots);
}

double unmatched_ratio(std::size_t unmatched, int k, int p, int k_f) {
  const int slots = k * (p - 1) + k_f;
  if (slots <= 0) throw ConfigError("recommendation slot count must be positive");
  return std::min(1.0, static_cast<double>(unmatched) / static_cast<double>(slots));
}

}  // namespace convrec
