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
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "convrec/corpus.hpp"
#include "convrec/embedding.hpp"
#include "convrec/error.hpp"

namespace convrec {

struct NmfParams {
  std::size_t d = 50;
  double lambda = 0.05;
  // Learning-rate scale: update t steps alpha/√(1 + (t-1)/1000) along the
  // mean gradient of its mini-batch.
  double alpha = 1.2;
  std::size_t updates = 15000;
  // Ratings per update.
  std::size_t batch_size = 32;
  double validation_fraction = 0.05;
  // Validation RMSE is checked (and the best parameters kept) this often.
  std::size_t checkpoint_every = 100;
  std::uint64_t seed = 0;
};

// Training diverged; update() is the 1-based update that produced a
// non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t update) : Error(what), update_(update) {}
  std::size_t update() const noexcept { return update_; }

 private:
  std::size_t update_;
};

struct NmfCheckpoint {
  std::size_t update = 0;
  double validation_rmse = 0.0;
  double best_rmse = 0.0;
  double min_factor = 0.0;  // smallest factor entry at this point
};

// Non-negative factor model. Predictions are clipped to [1, 5].
class NmfModel {
 public:
  NmfModel() = default;
  NmfModel(NmfParams params, std::vector<UserId> users, std::vector<ItemId> items);

  const NmfParams& params() const noexcept { return params_; }
  std::size_t d() const noexcept { return params_.d; }
  const std::vector<UserId>& users() const noexcept { return users_; }
  const std::vector<ItemId>& items() const noexcept { return items_; }

  std::optional<std::size_t> user_index(const UserId& user) const;
  std::optional<std::size_t> item_index(const ItemId& item) const;

  std::span<double> user_row(std::size_t u) { return {&user_factors_[u * d()], d()}; }
  std::span<const double> user_row(std::size_t u) const { return {&user_factors_[u * d()], d()}; }
  std::span<double> item_row(std::size_t i) { return {&item_factors_[i * d()], d()}; }
  std::span<const double> item_row(std::size_t i) const { return {&item_factors_[i * d()], d()}; }

  std::vector<double>& user_factors() noexcept { return user_factors_; }
  std::vector<double>& item_factors() noexcept { return item_factors_; }
  const std::vector<double>& user_factors() const noexcept { return user_factors_; }
  const std::vector<double>& item_factors() const noexcept { return item_factors_; }

  // Raw dot product (unclipped).
  double affinity(std::size_t u, std::size_t i) const;
  // Clipped prediction; throws DataError for unknown ids.
  double predict(const UserId& user, const ItemId& item) const;

  std::size_t updates_run = 0;
  double best_validation_rmse = 0.0;
  std::vector<NmfCheckpoint> checkpoints;

 private:
  NmfParams params_;
  std::vector<UserId> users_;
  std::vector<ItemId> items_;
  std::unordered_map<UserId, std::size_t> user_index_;
  std::unordered_map<ItemId, std::size_t> item_index_;
  std::vector<double> user_factors_;
  std::vector<double> item_factors_;
};

// Mini-batch SGD on squared error with L2 weight lambda, clamping factors at
// zero after every update and restoring the best validation checkpoint.
NmfModel nmf_train(std::span<const Interaction> ratings, const NmfParams& params);

// RMSE of clipped predictions over the given ratings (all ids must be known).
double nmf_rmse(const NmfModel& model, std::span<const Interaction> ratings);

// JSON checkpoint: header {d, lambda, alpha, seed, updates} plus matrices.
void save_nmf(const std::filesystem::path& path, const NmfModel& model);
NmfModel load_nmf(const std::filesystem::path& path);

// For each positive example item, its k_f nearest items by item-factor
// cosine (example items excluded); the pooled candidates are ranked by
// summed similarity to the positive examples. Throws DataError without
// positive examples.
std::vector<ItemId> nmf_item_recommend(const NmfModel& model, const UserSplit& split,
                                       std::size_t k_f);

// Items ranked by user·item affinity, excluded items skipped, ties by id.
// Throws DataError for an unknown user.
std::vector<ItemId> nmf_user_recommend(const NmfModel& model, const UserId& user,
                                       std::size_t k_f,
                                       const std::unordered_set<ItemId>& exclude = {});

// Uniform sample without replacement. Throws DataError when fewer than k_f
// items remain after exclusion.
std::vector<ItemId> random_recommend(const Catalog& catalog, std::size_t k_f, std::uint64_t seed,
                                     const std::unordered_set<ItemId>& exclude = {});

// Item factors as an embedding store (rows normalized; all-zero rows become
// the uniform direction). Catalog items without a factor row are added with
// the uniform direction too.
EmbeddingStore learned_item_store(const NmfModel& model, const Catalog& catalog);

}  // namespace convrec
