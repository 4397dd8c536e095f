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

#include "convrec/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "convrec/error.hpp"
#include "convrec/rng.hpp"
#include "http.hpp"
#include "json.hpp"
#include "text_util.hpp"

namespace convrec {
namespace {

using json = nlohmann::json;

double norm(std::span<const double> v) noexcept { return std::sqrt(dot(v, v)); }

}  // namespace

double dot(std::span<const double> u, std::span<const double> v) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
  return sum;
}

double cosine_sim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DataError(fmt::format("cosine_sim dimension mismatch: {} vs {}", u.size(), v.size()));
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw DataError("cosine_sim of a zero-norm vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

EmbeddingStore::EmbeddingStore(std::size_t dimension, ContentLevel level)
    : dimension_(dimension), level_(level) {
  if (dimension == 0) throw DataError("embedding dimension must be positive");
}

void EmbeddingStore::insert(const ItemId& item, std::span<const double> vector) {
  if (vector.size() != dimension_) {
    throw DataError(fmt::format("embedding for {} has dimension {}, expected {}", item.str(),
                                vector.size(), dimension_));
  }
  const double n = norm(vector);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DataError(fmt::format("embedding for {} has zero or non-finite norm", item.str()));
  }
  if (!index_.emplace(item, ids_.size()).second) {
    throw DataError(fmt::format("duplicate embedding for {}", item.str()));
  }
  ids_.push_back(item);
  for (const double x : vector) data_.push_back(x / n);
}

std::optional<std::size_t> EmbeddingStore::index_of(const ItemId& item) const {
  const auto it = index_.find(item);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingStore::vector(const ItemId& item) const {
  const auto index = index_of(item);
  if (!index) throw DataError(fmt::format("no embedding for item {}", item.str()));
  return row(*index);
}

std::span<const double> EmbeddingStore::row(std::size_t index) const {
  return {data_.data() + index * dimension_, dimension_};
}

std::vector<EmbeddingRecord> EmbeddingStore::records() const {
  std::vector<EmbeddingRecord> out;
  out.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const auto r = row(i);
    out.push_back({ids_[i], level_, Vector(r.begin(), r.end())});
  }
  return out;
}

LocalHashEmbedder::LocalHashEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw ConfigError("local embedding dimension must be positive");
}

std::size_t LocalHashEmbedder::bucket(std::string_view token) const noexcept {
  return static_cast<std::size_t>(stable_hash(token) % dimension_);
}

Vector LocalHashEmbedder::embed_one(std::string_view text) const {
  Vector v(dimension_, 0.0);
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw DataError("cannot embed a document without tokens");
  for (const auto& token : tokens) v[bucket(token)] += 1.0;
  const double n = norm(v);
  for (double& x : v) x /= n;
  return v;
}

std::vector<Vector> LocalHashEmbedder::embed(std::span<const std::string> texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(embed_one(text));
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw ConfigError("remote embedder needs an endpoint URL");
  config_.api_key = http::value_or_env(config_.api_key, "CONVREC_EMBED_API_KEY");
  if (config_.api_key.empty()) {
    throw ConfigError("remote embedder needs CONVREC_EMBED_API_KEY or an explicit api_key");
  }
  if (config_.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  if (config_.batch_size == 0) throw ConfigError("batch_size must be positive");
  http::parse_url(config_.endpoint);
}

std::vector<Vector> RemoteEmbedder::embed(std::span<const std::string> texts) {
  const auto url = http::parse_url(config_.endpoint);
  const json request = {{"input", std::vector<std::string>(texts.begin(), texts.end())},
                        {"model", config_.model}};
  const std::string body = request.dump();
  auto backoff = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    const auto response = http::post_json(url, body, config_.api_key, config_.timeout);
    if (http::is_auth_failure(response)) {
      throw AuthenticationError(
          fmt::format("embedding endpoint rejected the credentials (HTTP {})", response.status));
    }
    if (response.transport_ok && response.status == 200) {
      try {
        const auto parsed = json::parse(response.body);
        const auto& data = parsed.at("data");
        if (data.size() != texts.size()) {
          throw RemoteError(fmt::format("embedding response has {} vectors for {} inputs",
                                        data.size(), texts.size()));
        }
        std::vector<Vector> out;
        out.reserve(data.size());
        for (const auto& entry : data) out.push_back(entry.at("embedding").get<Vector>());
        return out;
      } catch (const json::exception& e) {
        throw RemoteError(fmt::format("malformed embedding response: {}", e.what()));
      }
    }
    last_error = response.transport_ok ? fmt::format("HTTP {}", response.status) : response.error;
    if (!http::is_transient(response)) break;
    if (attempt < config_.max_attempts) {
      spdlog::warn("embedding request failed ({}), retrying in {} ms", last_error, backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw RemoteError(fmt::format("embedding request failed: {}", last_error));
}

std::vector<EmbeddingRecord> load_embedding_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  std::vector<EmbeddingRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto record = json::parse(line);
      EmbeddingRecord r;
      r.item = ItemId(record.at("item_id").get<std::string>());
      r.level = content_level_from_int(record.at("level").get<int>());
      r.vector = record.at("vector").get<Vector>();
      if (r.vector.size() != record.at("dim").get<std::size_t>()) {
        throw ParseError("vector length disagrees with dim", line_no);
      }
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("bad embedding record: {}", e.what()), line_no);
    }
  }
  return records;
}

void append_embedding_records(const std::filesystem::path& path,
                              std::span<const EmbeddingRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  for (const auto& r : records) {
    const json record = {{"item_id", r.item.str()},
                         {"level", static_cast<int>(r.level)},
                         {"dim", r.vector.size()},
                         {"vector", r.vector}};
    out << record.dump() << '\n';
  }
}

EmbeddingStore load_embedding_store(const std::filesystem::path& path, ContentLevel level,
                                    std::optional<std::size_t> dimension) {
  const auto records = load_embedding_records(path);
  std::optional<EmbeddingStore> store;
  for (const auto& r : records) {
    if (r.level != level) continue;
    if (dimension && r.vector.size() != *dimension) continue;
    if (!store) store.emplace(r.vector.size(), level);
    if (store->contains(r.item)) continue;  // first record wins
    store->insert(r.item, r.vector);
  }
  if (!store) {
    throw DataError(fmt::format("{} holds no level-{} embeddings", path.string(),
                                static_cast<int>(level)));
  }
  return std::move(*store);
}

EmbeddingStore embed_catalog(EmbeddingProvider& provider,
                             const std::map<ItemId, std::string>& documents, ContentLevel level,
                             const EmbedOptions& options) {
  if (documents.empty()) throw DataError("no documents to embed");
  const std::size_t dim = provider.dimension();

  std::unordered_map<ItemId, Vector> cached;
  if (options.cache_path && !options.invalidate && std::filesystem::exists(*options.cache_path)) {
    for (auto& r : load_embedding_records(*options.cache_path)) {
      if (r.level == level && r.vector.size() == dim) cached.try_emplace(r.item, std::move(r.vector));
    }
  }
  if (options.cache_path && options.invalidate) std::filesystem::remove(*options.cache_path);

  std::vector<ItemId> pending;
  for (const auto& [id, text] : documents) {
    if (!cached.contains(id)) pending.push_back(id);
  }

  std::vector<EmbeddingRecord> fresh;
  std::vector<ItemId> failed;
  std::string first_error;
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const std::size_t end = std::min(pending.size(), start + batch);
    std::vector<std::string> texts;
    for (std::size_t i = start; i < end; ++i) texts.push_back(documents.at(pending[i]));
    try {
      auto vectors = provider.embed(texts);
      if (vectors.size() != texts.size()) throw RemoteError("provider returned a short batch");
      for (std::size_t i = start; i < end; ++i) {
        fresh.push_back({pending[i], level, std::move(vectors[i - start])});
      }
    } catch (const AuthenticationError&) {
      throw;
    } catch (const Error& e) {
      if (first_error.empty()) first_error = e.what();
      failed.insert(failed.end(), pending.begin() + static_cast<long>(start),
                    pending.begin() + static_cast<long>(end));
    }
  }
  if (options.cache_path && !fresh.empty()) append_embedding_records(*options.cache_path, fresh);
  if (!failed.empty()) {
    throw EmbeddingError(fmt::format("{} items could not be embedded: {}", failed.size(),
                                     first_error),
                         std::move(failed));
  }

  EmbeddingStore store(dim, level);
  for (auto& r : fresh) cached.insert_or_assign(r.item, std::move(r.vector));
  for (const auto& [id, text] : documents) store.insert(id, cached.at(id));
  return store;
}

QuantileIndex::QuantileIndex(double q, std::unordered_map<ItemId, double> thresholds)
    : q_(q), thresholds_(std::move(thresholds)) {}

double QuantileIndex::epsilon(const ItemId& item) const {
  const auto it = thresholds_.find(item);
  if (it == thresholds_.end()) {
    throw DataError(fmt::format("no similarity threshold for item {}", item.str()));
  }
  return it->second;
}

std::optional<double> QuantileIndex::find(const ItemId& item) const {
  const auto it = thresholds_.find(item);
  if (it == thresholds_.end()) return std::nullopt;
  return it->second;
}

std::size_t quantile_position(std::size_t n, double q) {
  const auto pos = static_cast<std::size_t>(std::floor(q * static_cast<double>(n) + 1e-9));
  return std::min(pos, n - 1);
}

QuantileIndex build_quantile_index(const EmbeddingStore& store, double q, std::size_t threads) {
  if (store.size() < 2) throw DataError("quantile thresholds need at least two items");
  if (!(q > 0.0 && q < 1.0)) throw ConfigError(fmt::format("q = {} is not in (0, 1)", q));

  const std::size_t n = store.size();
  const std::size_t position = quantile_position(n - 1, q);
  std::vector<double> eps(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    std::vector<double> sims(n - 1);
    for (std::size_t j = next++; j < n; j = next++) {
      const auto vj = store.row(j);
      std::size_t out = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i != j) sims[out++] = std::clamp(dot(vj, store.row(i)), -1.0, 1.0);
      }
      std::nth_element(sims.begin(), sims.begin() + static_cast<long>(position), sims.end());
      eps[j] = sims[position];
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::unordered_map<ItemId, double> thresholds;
  thresholds.reserve(n);
  for (std::size_t j = 0; j < n; ++j) thresholds.emplace(store.id(j), eps[j]);
  return QuantileIndex(q, std::move(thresholds));
}

void save_quantile_index(const std::filesystem::path& path, const QuantileIndex& index) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  std::vector<std::pair<ItemId, double>> sorted(index.thresholds().begin(),
                                                index.thresholds().end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [id, eps] : sorted) {
    out << json{{"item_id", id.str()}, {"q", index.q()}, {"epsilon", eps}}.dump() << '\n';
  }
}

QuantileIndex load_quantile_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  std::unordered_map<ItemId, double> thresholds;
  std::optional<double> q;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto record = json::parse(line);
      const double line_q = record.at("q").get<double>();
      if (q && *q != line_q) throw ParseError("threshold cache mixes several q values", line_no);
      q = line_q;
      thresholds.insert_or_assign(ItemId(record.at("item_id").get<std::string>()),
                                  record.at("epsilon").get<double>());
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("bad threshold record: {}", e.what()), line_no);
    }
  }
  if (!q) throw DataError(fmt::format("{} holds no thresholds", path.string()));
  return QuantileIndex(*q, std::move(thresholds));
}

std::vector<ItemId> nearest_items(const EmbeddingStore& store, std::span<const double> query,
                                  std::size_t k, const std::unordered_set<ItemId>& exclude) {
  if (k == 0) throw ConfigError("nearest_items needs k >= 1");
  if (query.size() != store.dimension()) {
    throw DataError(fmt::format("query dimension {} does not match store dimension {}",
                                query.size(), store.dimension()));
  }
  const double qn = norm(query);
  if (qn == 0.0) throw DataError("nearest_items query has zero norm");

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (exclude.contains(store.id(i))) continue;
    scored.emplace_back(dot(query, store.row(i)) / qn, i);
  }
  const auto better = [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return store.id(a.second) < store.id(b.second);
  };
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(take), scored.end(), better);
  std::vector<ItemId> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(store.id(scored[i].second));
  return out;
}

Vector mean_vector(const EmbeddingStore& store, std::span<const ItemId> items) {
  Vector mean(store.dimension(), 0.0);
  if (items.empty()) return mean;
  for (const auto& id : items) {
    const auto v = store.vector(id);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += v[d];
  }
  for (double& x : mean) x /= static_cast<double>(items.size());
  return mean;
}

}  // namespace convrec
