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

#include "convrec/baselines.hpp"

#include <algorithm>
#include <utility>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "convrec/rng.hpp"
#include "json.hpp"

namespace convrec {

using json = nlohmann::json;

NmfModel::NmfModel(NmfParams params, std::vector<UserId> users, std::vector<ItemId> items)
    : params_(params), users_(std::move(users)), items_(std::move(items)) {
  if (params_.d == 0) throw ConfigError("NMF needs at least one factor");
  for (std::size_t u = 0; u < users_.size(); ++u) {
    if (!user_index_.emplace(users_[u], u).second) {
      throw DataError(fmt::format("duplicate user {}", users_[u].str()));
    }
  }
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!item_index_.emplace(items_[i], i).second) {
      throw DataError(fmt::format("duplicate item {}", items_[i].str()));
    }
  }
  user_factors_.assign(users_.size() * params_.d, 0.0);
  item_factors_.assign(items_.size() * params_.d, 0.0);
}

std::optional<std::size_t> NmfModel::user_index(const UserId& user) const {
  const auto it = user_index_.find(user);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> NmfModel::item_index(const ItemId& item) const {
  const auto it = item_index_.find(item);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

double NmfModel::affinity(std::size_t u, std::size_t i) const {
  return dot(user_row(u), item_row(i));
}

double NmfModel::predict(const UserId& user, const ItemId& item) const {
  const auto u = user_index(user);
  const auto i = item_index(item);
  if (!u) throw DataError(fmt::format("NMF model has no user {}", user.str()));
  if (!i) throw DataError(fmt::format("NMF model has no item {}", item.str()));
  return std::clamp(affinity(*u, *i), kMinRating, kMaxRating);
}

double nmf_rmse(const NmfModel& model, std::span<const Interaction> ratings) {
  if (ratings.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : ratings) {
    const double e = r.rating - model.predict(r.user, r.item);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(ratings.size()));
}

namespace {

struct Indexed {
  std::size_t u;
  std::size_t i;
  double rating;
};

double min_entry(const NmfModel& model) {
  double m = 0.0;
  for (const double v : model.user_factors()) m = std::min(m, v);
  for (const double v : model.item_factors()) m = std::min(m, v);
  return m;
}

}  // namespace

NmfModel nmf_train(std::span<const Interaction> ratings, const NmfParams& params) {
  if (ratings.empty()) throw DataError("NMF needs at least one rating");
  if (!(params.validation_fraction > 0.0 && params.validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  if (params.batch_size == 0 || params.checkpoint_every == 0) {
    throw ConfigError("batch_size and checkpoint_every must be positive");
  }
  if (params.lambda < 0.0 || params.alpha <= 0.0) {
    throw ConfigError("lambda must be non-negative and the learning rate positive");
  }

  std::vector<Interaction> sorted(ratings.begin(), ratings.end());
  std::sort(sorted.begin(), sorted.end(), [](const Interaction& a, const Interaction& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  std::vector<UserId> users;
  std::vector<ItemId> items;
  for (const auto& r : sorted) {
    if (users.empty() || users.back() != r.user) users.push_back(r.user);
    items.push_back(r.item);
  }
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  NmfModel model(params, users, items);

  Rng rng(params.seed);
  rng.shuffle(std::span(sorted));
  auto n_valid = static_cast<std::size_t>(
      std::llround(params.validation_fraction * static_cast<double>(sorted.size())));
  n_valid = std::clamp<std::size_t>(n_valid, 1, sorted.size() > 1 ? sorted.size() - 1 : 1);
  if (sorted.size() < 2) throw DataError("NMF needs at least two ratings to hold one out");
  const std::span<const Interaction> validation(sorted.data(), n_valid);
  std::vector<Indexed> train;
  double mean = 0.0;
  for (std::size_t n = n_valid; n < sorted.size(); ++n) {
    const auto& r = sorted[n];
    train.push_back({*model.user_index(r.user), *model.item_index(r.item), r.rating});
    mean += r.rating;
  }
  mean /= static_cast<double>(train.size());

  // Factors start near the point where every prediction equals the mean.
  const double scale = std::sqrt(mean / static_cast<double>(params.d));
  for (auto& v : model.user_factors()) v = scale * (0.5 + rng.uniform01());
  for (auto& v : model.item_factors()) v = scale * (0.5 + rng.uniform01());

  const std::size_t d = params.d;
  // Gradient rows touched by the current mini-batch.
  struct Gradient {
    std::size_t row;
    std::vector<double> g;
  };
  std::vector<Gradient> user_grad, item_grad;
  const auto accumulate = [d](std::vector<Gradient>& grads, std::size_t row) -> std::vector<double>& {
    for (auto& entry : grads) {
      if (entry.row == row) return entry.g;
    }
    grads.push_back({row, std::vector<double>(d, 0.0)});
    return grads.back().g;
  };
  double best = nmf_rmse(model, validation);
  NmfModel best_model = model;
  std::size_t next = 0;
  for (std::size_t t = 1; t <= params.updates; ++t) {
    const double rate = params.alpha / std::sqrt(1.0 + static_cast<double>(t - 1) / 1000.0);
    const double step = rate / static_cast<double>(params.batch_size);
    user_grad.clear();
    item_grad.clear();
    double loss = 0.0;
    for (std::size_t b = 0; b < params.batch_size; ++b) {
      if (next == 0) rng.shuffle(std::span(train));
      const Indexed& r = train[next];
      next = (next + 1) % train.size();
      const auto pu = std::as_const(model).user_row(r.u);
      const auto qi = std::as_const(model).item_row(r.i);
      const double e = r.rating - dot(pu, qi);
      loss += e * e;
      auto& gu = accumulate(user_grad, r.u);
      auto& gi = accumulate(item_grad, r.i);
      for (std::size_t f = 0; f < d; ++f) {
        gu[f] += e * qi[f] - params.lambda * pu[f];
        gi[f] += e * pu[f] - params.lambda * qi[f];
      }
    }
    for (const auto& [row, g] : user_grad) {
      auto pu = model.user_row(row);
      for (std::size_t f = 0; f < d; ++f) pu[f] = std::max(0.0, pu[f] + step * g[f]);
    }
    for (const auto& [row, g] : item_grad) {
      auto qi = model.item_row(row);
      for (std::size_t f = 0; f < d; ++f) qi[f] = std::max(0.0, qi[f] + step * g[f]);
    }
    if (!std::isfinite(loss)) {
      throw TrainingError(fmt::format("NMF training diverged at update {}", t), t);
    }
    if (t % params.checkpoint_every == 0 || t == params.updates) {
      const double rmse = nmf_rmse(model, validation);
      if (!std::isfinite(rmse)) {
        throw TrainingError(fmt::format("NMF validation loss is not finite at update {}", t), t);
      }
      if (rmse < best) {
        best = rmse;
        best_model = model;
      }
      model.checkpoints.push_back({t, rmse, best, min_entry(model)});
    }
  }
  best_model.updates_run = params.updates;
  best_model.best_validation_rmse = best;
  best_model.checkpoints = std::move(model.checkpoints);
  return best_model;
}

void save_nmf(const std::filesystem::path& path, const NmfModel& model) {
  const auto& p = model.params();
  json users = json::array();
  for (const auto& u : model.users()) users.push_back(u.str());
  json items = json::array();
  for (const auto& i : model.items()) items.push_back(i.str());
  const json doc = {{"header",
                     {{"d", p.d},
                      {"lambda", p.lambda},
                      {"alpha", p.alpha},
                      {"seed", p.seed},
                      {"updates", model.updates_run},
                      {"batch_size", p.batch_size},
                      {"validation_fraction", p.validation_fraction},
                      {"best_validation_rmse", model.best_validation_rmse}}},
                    {"users", users},
                    {"items", items},
                    {"user_factors", model.user_factors()},
                    {"item_factors", model.item_factors()}};
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out << doc.dump() << '\n';
}

NmfModel load_nmf(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  try {
    const json doc = json::parse(in);
    const auto& h = doc.at("header");
    NmfParams p;
    p.d = h.at("d").get<std::size_t>();
    p.lambda = h.at("lambda").get<double>();
    p.alpha = h.at("alpha").get<double>();
    p.seed = h.at("seed").get<std::uint64_t>();
    p.updates = h.at("updates").get<std::size_t>();
    p.batch_size = h.value("batch_size", p.batch_size);
    p.validation_fraction = h.value("validation_fraction", p.validation_fraction);
    std::vector<UserId> users;
    for (const auto& u : doc.at("users")) users.emplace_back(u.get<std::string>());
    std::vector<ItemId> items;
    for (const auto& i : doc.at("items")) items.emplace_back(i.get<std::string>());
    NmfModel model(p, std::move(users), std::move(items));
    model.user_factors() = doc.at("user_factors").get<std::vector<double>>();
    model.item_factors() = doc.at("item_factors").get<std::vector<double>>();
    if (model.user_factors().size() != model.users().size() * p.d ||
        model.item_factors().size() != model.items().size() * p.d) {
      throw ParseError(fmt::format("{}: factor matrix shape disagrees with the header",
                                   path.string()),
                       0);
    }
    model.updates_run = p.updates;
    model.best_validation_rmse = h.value("best_validation_rmse", 0.0);
    return model;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()), 0);
  }
}

namespace {

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double factor_cosine(const NmfModel& model, std::size_t a, std::size_t b,
                     const std::vector<double>& norms) {
  if (norms[a] == 0.0 || norms[b] == 0.0) return 0.0;
  return dot(model.item_row(a), model.item_row(b)) / (norms[a] * norms[b]);
}

}  // namespace

std::vector<ItemId> nmf_item_recommend(const NmfModel& model, const UserSplit& split,
                                       std::size_t k_f) {
  std::vector<std::size_t> positives;
  std::unordered_set<std::size_t> example_rows;
  for (const auto& i : split.example_set) {
    const auto row = model.item_index(i.item);
    if (!row) continue;
    example_rows.insert(*row);
    if (i.positive()) positives.push_back(*row);
  }
  if (positives.empty()) {
    throw DataError(fmt::format("user {} has no positive example with item factors",
                                split.user.str()));
  }
  std::vector<double> norms(model.items().size());
  for (std::size_t i = 0; i < norms.size(); ++i) norms[i] = norm(model.item_row(i));

  const auto by_score_then_id = [&](const std::pair<double, std::size_t>& a,
                                    const std::pair<double, std::size_t>& b) {
    if (a.first != b.first) return a.first > b.first;
    return model.items()[a.second] < model.items()[b.second];
  };

  std::vector<std::size_t> pool;
  for (const auto p : positives) {
    std::vector<std::pair<double, std::size_t>> neighbors;
    for (std::size_t i = 0; i < norms.size(); ++i) {
      if (example_rows.contains(i)) continue;
      neighbors.emplace_back(factor_cosine(model, p, i, norms), i);
    }
    const std::size_t take = std::min(k_f, neighbors.size());
    std::partial_sort(neighbors.begin(), neighbors.begin() + static_cast<std::ptrdiff_t>(take),
                      neighbors.end(), by_score_then_id);
    for (std::size_t n = 0; n < take; ++n) pool.push_back(neighbors[n].second);
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  std::vector<std::pair<double, std::size_t>> ranked;
  for (const auto i : pool) {
    double total = 0.0;
    for (const auto p : positives) total += factor_cosine(model, p, i, norms);
    ranked.emplace_back(total, i);
  }
  std::sort(ranked.begin(), ranked.end(), by_score_then_id);
  std::vector<ItemId> out;
  for (std::size_t n = 0; n < ranked.size() && n < k_f; ++n) {
    out.push_back(model.items()[ranked[n].second]);
  }
  return out;
}

std::vector<ItemId> nmf_user_recommend(const NmfModel& model, const UserId& user,
                                       std::size_t k_f,
                                       const std::unordered_set<ItemId>& exclude) {
  const auto u = model.user_index(user);
  if (!u) throw DataError(fmt::format("NMF model has no user {}", user.str()));
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < model.items().size(); ++i) {
    if (exclude.contains(model.items()[i])) continue;
    ranked.emplace_back(model.affinity(*u, i), i);
  }
  const std::size_t take = std::min(k_f, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take),
                    ranked.end(), [&](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return model.items()[a.second] < model.items()[b.second];
                    });
  std::vector<ItemId> out;
  for (std::size_t n = 0; n < take; ++n) out.push_back(model.items()[ranked[n].second]);
  return out;
}

std::vector<ItemId> random_recommend(const Catalog& catalog, std::size_t k_f, std::uint64_t seed,
                                     const std::unordered_set<ItemId>& exclude) {
  std::vector<ItemId> candidates;
  for (const auto& item : catalog.items()) {
    if (!exclude.contains(item.id)) candidates.push_back(item.id);
  }
  if (candidates.size() < k_f) {
    throw DataError(fmt::format("random baseline needs {} items, only {} remain", k_f,
                                candidates.size()));
  }
  std::sort(candidates.begin(), candidates.end());
  Rng rng(seed);
  // Partial Fisher-Yates: the first k_f slots are a uniform sample.
  for (std::size_t n = 0; n < k_f; ++n) {
    std::swap(candidates[n], candidates[n + rng.uniform_index(candidates.size() - n)]);
  }
  candidates.resize(k_f);
  return candidates;
}

EmbeddingStore learned_item_store(const NmfModel& model, const Catalog& catalog) {
  EmbeddingStore store(model.d(), ContentLevel::kBasic);
  const std::vector<double> uniform(model.d(), 1.0);
  for (const auto& item : catalog.items()) {
    const auto row = model.item_index(item.id);
    if (row && norm(model.item_row(*row)) > 0.0) {
      store.insert(item.id, model.item_row(*row));
    } else {
      store.insert(item.id, uniform);
    }
  }
  return store;
}

}  // namespace convrec
