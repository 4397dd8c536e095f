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
#include <unordered_map>
#include <vector>

#include "convrec/corpus.hpp"
#include "convrec/embedding.hpp"

namespace convrec {

struct JudgedItem {
  ItemId item;
  bool relevant = false;
};

// Judged recommendations in extraction order; unmatched titles only count.
struct RankedList {
  std::vector<JudgedItem> items;
  std::size_t unmatched_count = 0;
};

// Relevant / judged. Absent when nothing was judged.
std::optional<double> precision(const RankedList& list);

// Binary-gain DCG with discount 1/log2(rank + 1) over the ideal DCG of the
// same gains; 0 when no item is relevant. Absent when nothing was judged.
std::optional<double> ndcg(const RankedList& list);

// Mean of precision@i over the relevant positions i; 0 when none is
// relevant. Absent when nothing was judged.
std::optional<double> average_precision(const RankedList& list);

// Mean pairwise cosine similarity over unordered pairs. Absent for fewer
// than two items.
std::optional<double> ils(std::span<const std::span<const double>> vectors);
std::optional<double> ils(const EmbeddingStore& store, std::span<const ItemId> items);

// Fraction of reference items admitted by at least one recommendation
// (see admits()). Each reference item counts once. 0 for an empty
// reference set.
double coverage(std::span<const ItemId> recommendations, std::span<const Interaction> reference,
                const EmbeddingStore& embeddings, const QuantileIndex& quantiles);

// Item -> share of sessions whose recommendations contain it. Each inner
// vector is one session's matched recommendations (repeats allowed).
std::unordered_map<ItemId, double> popularity_table(
    std::span<const std::vector<ItemId>> sessions);

// Σ (1 - popularity) over the matched recommendation instances, divided by
// the slot count. Unmatched slots add nothing but stay in the denominator.
double novelty(std::span<const ItemId> recommendations,
               const std::unordered_map<ItemId, double>& popularity, std::size_t slots);

// unmatched / (k(p-1) + k_f).
double unmatched_ratio(std::size_t unmatched, int k, int p, int k_f);

struct MetricsReport {
  std::optional<double> precision;
  std::optional<double> ndcg;
  std::optional<double> map;
  std::optional<double> ils;
  std::optional<double> coverage;
  std::optional<double> novelty;  // filled in once every session has run
  std::optional<double> unmatched_ratio;
  std::size_t matched = 0;
  std::size_t judged = 0;
  std::size_t unmatched = 0;
};

}  // namespace convrec
