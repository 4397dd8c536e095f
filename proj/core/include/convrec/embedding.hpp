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

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "convrec/corpus.hpp"
#include "convrec/types.hpp"

namespace convrec {

using Vector = std::vector<double>;

// Σ uᵢvᵢ / (‖u‖‖v‖), clamped to [-1, 1]. Throws DataError on a dimension
// mismatch or a zero-norm input.
double cosine_sim(std::span<const double> u, std::span<const double> v);

// Plain dot product; equals cosine_sim for unit vectors.
double dot(std::span<const double> u, std::span<const double> v) noexcept;

struct EmbeddingRecord {
  ItemId item;
  ContentLevel level = ContentLevel::kBasic;
  Vector vector;
};

// Dense row store of unit-norm item vectors. Read-only once built.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::size_t dimension, ContentLevel level);

  // Normalizes `vector` to unit length. Throws DataError on a zero vector,
  // a dimension mismatch or a duplicate id.
  void insert(const ItemId& item, std::span<const double> vector);

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t dimension() const noexcept { return dimension_; }
  ContentLevel level() const noexcept { return level_; }

  bool contains(const ItemId& item) const { return index_.contains(item); }
  std::optional<std::size_t> index_of(const ItemId& item) const;
  // Throws DataError naming the item when it has no embedding.
  std::span<const double> vector(const ItemId& item) const;
  std::span<const double> row(std::size_t index) const;
  const ItemId& id(std::size_t index) const { return ids_[index]; }
  const std::vector<ItemId>& ids() const noexcept { return ids_; }

  std::vector<EmbeddingRecord> records() const;

 private:
  std::size_t dimension_ = 0;
  ContentLevel level_ = ContentLevel::kBasic;
  std::vector<ItemId> ids_;
  std::vector<double> data_;
  std::unordered_map<ItemId, std::size_t> index_;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  // One vector per text, in order. Vectors need not be normalized.
  virtual std::vector<Vector> embed(std::span<const std::string> texts) = 0;
};

// Deterministic offline provider: token counts hashed (FNV-1a) into
// `dimension` buckets, then L2-normalized. Stop words are kept.
class LocalHashEmbedder final : public EmbeddingProvider {
 public:
  explicit LocalHashEmbedder(std::size_t dimension);

  std::string name() const override { return "local-hash"; }
  std::size_t dimension() const override { return dimension_; }
  std::vector<Vector> embed(std::span<const std::string> texts) override;

  // Throws DataError when the text has no tokens.
  Vector embed_one(std::string_view text) const;
  std::size_t bucket(std::string_view token) const noexcept;

 private:
  std::size_t dimension_;
};

struct RemoteEmbedderConfig {
  std::string endpoint;  // full URL, e.g. https://host/v1/embeddings
  std::string model;
  std::size_t dimension = 1536;
  // Read from CONVREC_EMBED_API_KEY when empty.
  std::string api_key;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::size_t batch_size = 64;
  std::chrono::seconds timeout{60};
};

// POST {"input": [texts], "model": name} -> {"data": [{"embedding": [...]}]}.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  // Throws ConfigError without an endpoint or API key.
  explicit RemoteEmbedder(RemoteEmbedderConfig config);

  std::string name() const override { return "remote:" + config_.model; }
  std::size_t dimension() const override { return config_.dimension; }
  std::vector<Vector> embed(std::span<const std::string> texts) override;

  std::size_t batch_size() const noexcept { return config_.batch_size; }

 private:
  RemoteEmbedderConfig config_;
};

struct EmbedOptions {
  // JSONL cache; records already present (same level and dimension) are
  // reused and never re-requested unless `invalidate` is set.
  std::optional<std::filesystem::path> cache_path;
  bool invalidate = false;
  std::size_t batch_size = 64;
};

// Embeds every document, persisting new vectors to the cache before
// returning. A failed remote batch does not stop the others; afterwards an
// EmbeddingError lists every item that could not be embedded.
EmbeddingStore embed_catalog(EmbeddingProvider& provider,
                             const std::map<ItemId, std::string>& documents, ContentLevel level,
                             const EmbedOptions& options = {});

// Embedding cache lines: {"item_id": "...", "level": 4, "dim": 1536, "vector": [...]}.
std::vector<EmbeddingRecord> load_embedding_records(const std::filesystem::path& path);
void append_embedding_records(const std::filesystem::path& path,
                              std::span<const EmbeddingRecord> records);
// Store holding the cached records of one level (and dimension, when given).
EmbeddingStore load_embedding_store(const std::filesystem::path& path, ContentLevel level,
                                    std::optional<std::size_t> dimension = std::nullopt);

// Per-item similarity thresholds ε_j: the q-quantile of item j's cosine
// similarities to every other catalog item.
class QuantileIndex {
 public:
  QuantileIndex() = default;
  QuantileIndex(double q, std::unordered_map<ItemId, double> thresholds);

  double q() const noexcept { return q_; }
  std::size_t size() const noexcept { return thresholds_.size(); }
  // Throws DataError naming the item when absent.
  double epsilon(const ItemId& item) const;
  std::optional<double> find(const ItemId& item) const;
  const std::unordered_map<ItemId, double>& thresholds() const noexcept { return thresholds_; }

 private:
  double q_ = 0.0;
  std::unordered_map<ItemId, double> thresholds_;
};

// 0-based position of the q-quantile among n ascending values:
// floor(q·n), capped at n-1. With n = 100 and q = 0.99 this is the maximum,
// so exactly the top 1% of comparisons reach the threshold.
std::size_t quantile_position(std::size_t n, double q);

// Streams one similarity row per item (the N×N matrix is never held).
// `threads` = 0 uses the hardware concurrency. Output is independent of the
// thread count.
QuantileIndex build_quantile_index(const EmbeddingStore& store, double q, std::size_t threads = 0);

// Threshold cache lines: {"item_id": "...", "q": 0.99, "epsilon": 0.87}.
void save_quantile_index(const std::filesystem::path& path, const QuantileIndex& index);
QuantileIndex load_quantile_index(const std::filesystem::path& path);

// Top-k items by cosine similarity to `query`, descending, ties by ascending
// id. Returns fewer than k when the store runs out.
std::vector<ItemId> nearest_items(const EmbeddingStore& store, std::span<const double> query,
                                  std::size_t k, const std::unordered_set<ItemId>& exclude = {});

// Arithmetic mean of the given items' vectors (not normalized).
Vector mean_vector(const EmbeddingStore& store, std::span<const ItemId> items);

}  // namespace convrec
