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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "convrec/baselines.hpp"
#include "convrec/conversation.hpp"
#include "convrec/embedding.hpp"
#include "convrec/experiment.hpp"
#include "convrec/llm.hpp"
#include "convrec/matching.hpp"
#include "convrec/metrics.hpp"
#include "convrec/relevancy.hpp"
#include "convrec/rng.hpp"
#include "json.hpp"
#include "world.hpp"

namespace {

using namespace convrec;
using convrec::testing::World;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------- oracles

std::size_t dp_levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
    }
  }
  return d[a.size()][b.size()];
}

std::string random_ascii(Rng& rng, std::size_t max_len, std::string_view alphabet) {
  const std::size_t n = rng.uniform_index(max_len + 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += alphabet[rng.uniform_index(alphabet.size())];
  return s;
}

std::u32string to_u32(const std::string& s) { return std::u32string(s.begin(), s.end()); }

double raw_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

std::vector<double> random_vector(Rng& rng, std::size_t dim, bool nonnegative) {
  std::vector<double> v(dim);
  for (auto& x : v) x = nonnegative ? rng.uniform01() : rng.uniform01() * 2.0 - 1.0;
  return v;
}

Outcome criterion_1() {
  const auto start = Clock::now();
  Rng rng(1);
  std::vector<std::string> failures;

  // NLS against a full-matrix DP.
  std::size_t nls_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = random_ascii(rng, 24, "abcde fgh");
    const auto b = random_ascii(rng, 24, "abcde fgh");
    const double ld = static_cast<double>(dp_levenshtein(to_u32(a), to_u32(b)));
    const double denominator = static_cast<double>(a.size() + b.size()) + ld;
    const double expected = denominator == 0 ? 1.0 : 1.0 - 2.0 * ld / denominator;
    if (nls(a, b) != expected) ++nls_bad;
  }
  if (nls_bad) failures.push_back(fmt::format("{} NLS mismatches", nls_bad));

  // Relevancy against direct summation from raw vectors.
  double worst_relevancy = 0.0;
  std::size_t presence_bad = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 5 + rng.uniform_index(30);
    const std::size_t dim = 2 + rng.uniform_index(6);
    EmbeddingStore store(dim, ContentLevel::kBasic);
    std::vector<std::vector<double>> raw;
    std::unordered_map<ItemId, double> eps;
    for (std::size_t i = 0; i < n; ++i) {
      raw.push_back(random_vector(rng, dim, trial % 2 == 0));
      store.insert(ItemId(fmt::format("i{}", i)), raw.back());
      eps[ItemId(fmt::format("i{}", i))] = rng.uniform01() * 1.2 - 0.2;
    }
    const QuantileIndex quantiles(0.99, eps);
    const std::size_t target = rng.uniform_index(n);
    std::vector<Interaction> reference;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == target || rng.uniform01() < 0.5) continue;
      reference.push_back({UserId("u"), ItemId(fmt::format("i{}", j)),
                           1.0 + static_cast<double>(rng.uniform_index(5))});
    }
    double num = 0, den = 0;
    std::size_t admitted = 0;
    for (const auto& r : reference) {
      const std::size_t j = std::stoul(r.item.str().substr(1));
      const double sim = raw_cosine(raw[target], raw[j]);
      if (sim >= eps.at(r.item) && sim > 0) {
        num += r.rating * sim;
        den += sim;
        ++admitted;
      }
    }
    const auto got = estimate_rating(ItemId(fmt::format("i{}", target)), reference, store,
                                     quantiles);
    if (got.has_value() != (admitted > 0)) {
      ++presence_bad;
    } else if (got) {
      worst_relevancy = std::max(worst_relevancy, std::abs(*got - num / den));
    }
  }
  if (presence_bad || worst_relevancy > 1e-9) {
    failures.push_back(fmt::format("relevancy: {} presence mismatches, max error {:.3g}",
                                   presence_bad, worst_relevancy));
  }

  // Ranking metrics against enumeration of every binary list of length <= 10.
  std::size_t metric_bad = 0;
  for (std::size_t len = 1; len <= 10; ++len) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << len); ++mask) {
      RankedList list;
      std::vector<int> rel(len);
      for (std::size_t i = 0; i < len; ++i) {
        rel[i] = (mask >> i) & 1u;
        list.items.push_back({ItemId(fmt::format("x{}", i)), rel[i] == 1});
      }
      const int r = std::accumulate(rel.begin(), rel.end(), 0);
      const double exp_precision = static_cast<double>(r) / static_cast<double>(len);
      double dcg = 0;
      for (std::size_t i = 0; i < len; ++i) dcg += rel[i] / std::log2(static_cast<double>(i) + 2);
      // Ideal DCG: best over every placement of the r relevant items.
      double ideal = 0;
      for (std::size_t placement = 0; placement < (std::size_t{1} << len); ++placement) {
        if (std::popcount(placement) != r) continue;
        double g = 0;
        for (std::size_t i = 0; i < len; ++i) {
          if ((placement >> i) & 1u) g += 1.0 / std::log2(static_cast<double>(i) + 2);
        }
        ideal = std::max(ideal, g);
      }
      const double exp_ndcg = r == 0 ? 0.0 : dcg / ideal;
      double ap = 0;
      for (std::size_t k = 0; k < len; ++k) {
        if (!rel[k]) continue;
        int hits = 0;
        for (std::size_t i = 0; i <= k; ++i) hits += rel[i];
        ap += static_cast<double>(hits) / static_cast<double>(k + 1);
      }
      const double exp_ap = r == 0 ? 0.0 : ap / r;
      if (*precision(list) != exp_precision || std::abs(*ndcg(list) - exp_ndcg) > 1e-12 ||
          std::abs(*average_precision(list) - exp_ap) > 1e-12) {
        ++metric_bad;
      }
    }
  }
  // ILS against ordered-pair enumeration.
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(9);
    std::vector<std::vector<double>> vs;
    for (std::size_t i = 0; i < n; ++i) vs.push_back(random_vector(rng, 5, false));
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) sum += raw_cosine(vs[i], vs[j]);
      }
    }
    const double expected = sum / static_cast<double>(n * (n - 1));
    std::vector<std::span<const double>> spans(vs.begin(), vs.end());
    if (std::abs(*ils(spans) - expected) > 1e-12) ++metric_bad;
  }
  if (metric_bad) failures.push_back(fmt::format("{} ranking/ILS mismatches", metric_bad));

  // Quantile thresholds against sort-and-pick.
  std::size_t quantile_bad = 0;
  for (const std::size_t n : {2u, 3u, 7u, 50u, 101u, 200u}) {
    for (const double q : {0.01, 0.5, 0.9, 0.99}) {
      EmbeddingStore store(6, ContentLevel::kBasic);
      for (std::size_t i = 0; i < n; ++i) {
        store.insert(ItemId(fmt::format("q{:03}", i)), random_vector(rng, 6, false));
      }
      const auto index = build_quantile_index(store, q, 2);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> sims;
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) sims.push_back(dot(store.row(i), store.row(j)));
        }
        std::sort(sims.begin(), sims.end());
        const auto pos = std::min(sims.size() - 1, static_cast<std::size_t>(std::floor(
                                                       q * static_cast<double>(sims.size()) + 1e-9)));
        if (index.epsilon(store.id(i)) != sims[pos]) ++quantile_bad;
      }
    }
  }
  if (quantile_bad) failures.push_back(fmt::format("{} quantile mismatches", quantile_bad));

  const double elapsed = seconds_since(start);
  if (elapsed >= 10.0) failures.push_back(fmt::format("took {:.1f} s", elapsed));
  std::string detail = failures.empty() ? fmt::format("all oracles agree in {:.2f} s", elapsed)
                                        : fmt::format("{}", fmt::join(failures, "; "));
  return {failures.empty(), detail};
}

// ------------------------------------------------------------- experiments

struct SimulatedRun {
  std::vector<ResultRow> rows;
  std::string csv;
};

std::unique_ptr<World> world_for(std::uint64_t seed, std::size_t users) {
  convrec::testing::WorldOptions options;
  options.seed = seed;
  options.users = users;
  return convrec::testing::build_world(options);
}

SimulatedRun run_simulated(const World& world, const ExperimentConfig& config,
                           const std::optional<std::filesystem::path>& run_dir = std::nullopt,
                           SimulatedConfig sim = {}) {
  SimulatedRecommender client(world.catalog(), world.embeddings, world.popularity, sim);
  ExperimentResources resources{world.catalog(), world.embeddings, world.quantiles, world.splits};
  resources.client = &client;
  RunOptions options;
  options.run_dir = run_dir;
  SimulatedRun run;
  run.rows = run_experiment(config, resources, options);
  std::ostringstream csv;
  write_results_csv(csv, run.rows);
  run.csv = csv.str();
  return run;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / fmt::format("convrec-acceptance-{}", name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentConfig determinism_config() {
  ExperimentConfig config;
  config.name = "determinism";
  config.replicates = 2;
  config.prompt_styles = {PromptStyle::kZero, PromptStyle::kCot};
  config.k = {10};
  config.p = {1, 3};
  config.temperatures = {0.7};
  config.seed = 11;
  return config;
}

Outcome criterion_2(const World& world, const std::filesystem::path& run_dir) {
  const auto start = Clock::now();
  auto config = determinism_config();
  const auto first = run_simulated(world, config, run_dir);
  config.parallelism = 3;
  const auto second = run_simulated(world, config, std::nullopt);
  const double elapsed = seconds_since(start);
  const std::size_t cells = expand_grid(config).size();
  const bool same = first.csv == second.csv;
  const bool shape = first.rows.size() == 10 * 2 * 4 && cells == 4;
  const bool all_ok = std::all_of(first.rows.begin(), first.rows.end(),
                                  [](const ResultRow& r) { return r.ok; });
  return {same && shape && all_ok && elapsed < 60.0,
          fmt::format("{} rows over {} cells, CSVs {} ({} bytes), {} failed sessions, {:.1f} s",
                      first.rows.size(), cells, same ? "byte-identical" : "DIFFER",
                      first.csv.size(),
                      std::count_if(first.rows.begin(), first.rows.end(),
                                    [](const ResultRow& r) { return !r.ok; }),
                      elapsed)};
}

double mean_of(const std::vector<ResultRow>& rows, const std::string& key,
               std::optional<double> MetricsReport::*metric) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& row : rows) {
    if (row.cell.key() != key || !(row.report.*metric)) continue;
    sum += *(row.report.*metric);
    ++n;
  }
  return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

Outcome criterion_3() {
  std::size_t holds = 0;
  std::vector<std::string> details;
  bool coverage_ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto world = world_for(100 + seed, 20);
    ExperimentConfig config;
    config.name = "reprompting";
    config.k = {10};
    config.p = {1, 5};
    config.seed = seed;
    const auto run = run_simulated(*world, config);
    const double p5 = mean_of(run.rows, "llm_zero_k10_p5_t0_popyes", &MetricsReport::precision);
    const double p1 = mean_of(run.rows, "llm_zero_k20_p1_t0_popyes", &MetricsReport::precision);
    bool monotone = true;
    for (const auto& row : run.rows) {
      for (std::size_t t = 1; t < row.coverage_by_turn.size(); ++t) {
        if (row.coverage_by_turn[t] < row.coverage_by_turn[t - 1]) monotone = false;
      }
    }
    coverage_ok = coverage_ok && monotone;
    if (p5 - p1 >= 0.05 && monotone) ++holds;
    details.push_back(fmt::format("{:.3f}/{:.3f}", p5, p1));
  }
  return {holds * 10 >= 5 * 9,
          fmt::format("trend held in {}/5 seeds (p5/p1 precision: {}), coverage monotone: {}",
                      holds, fmt::join(details, ", "), coverage_ok ? "yes" : "no")};
}

Outcome criterion_4() {
  const auto world = world_for(21, 20);
  // Content-embedding judging: simulated LLM vs random.
  ExperimentConfig config;
  config.name = "baselines";
  config.p = {1};
  config.models = {ModelKind::kLlm, ModelKind::kRandom};
  config.seed = 3;
  const auto run = run_simulated(*world, config);
  const double llm = mean_of(run.rows, "llm_zero_k20_p1_t0_popyes", &MetricsReport::precision);
  const double random_content =
      mean_of(run.rows, "random_zero_k20_p1_t0_popyes", &MetricsReport::precision);

  // Learned-factor judging: NMF baselines vs random.
  NmfParams params;
  params.seed = 5;
  const auto training = convrec::testing::training_ratings(*world);
  const auto model = nmf_train(training, params);
  const auto factor_store = learned_item_store(model, world->catalog());
  const auto factor_quantiles = build_quantile_index(factor_store, 0.99, 1);
  ExperimentConfig baselines;
  baselines.name = "baselines-learned";
  baselines.p = {1};
  baselines.models = {ModelKind::kNmfUser, ModelKind::kNmfItem, ModelKind::kRandom};
  baselines.judge_baselines_with_factors = true;
  baselines.seed = 3;
  ExperimentResources resources{world->catalog(), world->embeddings, world->quantiles,
                                world->splits};
  resources.nmf = &model;
  resources.factor_store = &factor_store;
  resources.factor_quantiles = &factor_quantiles;
  const auto rows = run_experiment(baselines, resources);
  const double nmf_user = mean_of(rows, "nmf-user_zero_k20_p1_t0_popyes", &MetricsReport::precision);
  const double nmf_item = mean_of(rows, "nmf-item_zero_k20_p1_t0_popyes", &MetricsReport::precision);
  const double random_learned =
      mean_of(rows, "random_zero_k20_p1_t0_popyes", &MetricsReport::precision);

  const bool pass = llm - random_content >= 0.15 && nmf_user - random_learned >= 0.10 &&
                    nmf_item - random_learned >= 0.10;
  return {pass, fmt::format("llm {:.3f} vs random {:.3f} (content); nmf-user {:.3f}, nmf-item "
                            "{:.3f} vs random {:.3f} (learned); validation RMSE {:.3f}",
                            llm, random_content, nmf_user, nmf_item, random_learned,
                            model.best_validation_rmse)};
}

Outcome criterion_5() {
  const auto world = world_for(31, 20);
  ExperimentConfig config;
  config.name = "popularity";
  config.p = {1};
  config.replicates = 2;
  config.temperatures = {0.0, 1.0};
  config.prompt_popular = {true, false};
  config.seed = 9;
  const auto run = run_simulated(*world, config);
  const std::string base = "llm_zero_k20_p1_t0_popyes";
  const std::string controlled = "llm_zero_k20_p1_t1_popno";
  const double novelty_base = mean_of(run.rows, base, &MetricsReport::novelty);
  const double novelty_controlled = mean_of(run.rows, controlled, &MetricsReport::novelty);
  const auto report = popularity_report(run.rows);
  double max_base = 0, max_controlled = 0;
  for (const auto& cell : report.cells) {
    if (cell.cell.key() == base) max_base = cell.max_frequency;
    if (cell.cell.key() == controlled) max_controlled = cell.max_frequency;
  }
  const bool pass = novelty_controlled - novelty_base >= 0.10 && max_controlled < max_base;
  return {pass, fmt::format("novelty {:.3f} -> {:.3f}, top-item frequency {:.3f} -> {:.3f}",
                            novelty_base, novelty_controlled, max_base, max_controlled)};
}

Outcome criterion_6(const World& world) {
  const TitleMatcher matcher(world.catalog());
  Rng rng(6);
  const auto& items = world.catalog().items();
  std::size_t recovered = 0;
  const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& item = items[rng.uniform_index(items.size())];
    std::string title = item.normalized_title;
    const std::size_t pos = rng.uniform_index(title.size() + 1);
    switch (rng.uniform_index(3)) {
      case 0:  // insertion
        title.insert(title.begin() + static_cast<std::ptrdiff_t>(pos),
                     letters[rng.uniform_index(letters.size())]);
        break;
      case 1:  // deletion
        title.erase(std::min(pos, title.size() - 1), 1);
        break;
      default: {  // substitution by a different character
        const std::size_t at = std::min(pos, title.size() - 1);
        char c = letters[rng.uniform_index(letters.size())];
        while (std::tolower(static_cast<unsigned char>(c)) ==
               std::tolower(static_cast<unsigned char>(title[at]))) {
          c = letters[rng.uniform_index(letters.size())];
        }
        title[at] = c;
      }
    }
    const auto result = matcher.match(title, 0.75);
    if (result.matched_item == item.id) ++recovered;
  }
  std::size_t false_matches = 0;
  const std::string garbage_alphabet = "abcdefghijklmnopqrstuvwxyz0123456789 ()-:'!?";
  for (int trial = 0; trial < 1000; ++trial) {
    std::string s;
    const std::size_t n = 1 + rng.uniform_index(40);
    for (std::size_t i = 0; i < n; ++i) s += garbage_alphabet[rng.uniform_index(garbage_alphabet.size())];
    if (matcher.match(s, 0.75).matched_item) ++false_matches;
  }
  return {recovered >= 950 && false_matches == 0,
          fmt::format("{}/1000 corrupted titles recovered, {} false matches from garbage",
                      recovered, false_matches)};
}

Outcome criterion_7() {
  const auto start = Clock::now();
  Rng rng(77);
  const std::size_t users = 20, items = 30, rank = 3;
  std::vector<double> w(users * rank), h(items * rank);
  for (auto& x : w) x = 0.6 + 0.65 * rng.uniform01();
  for (auto& x : h) x = 0.6 + 0.65 * rng.uniform01();
  std::vector<Interaction> ratings;
  for (std::size_t u = 0; u < users; ++u) {
    for (std::size_t i = 0; i < items; ++i) {
      if (rng.uniform01() >= 0.5) continue;
      double r = 0;
      for (std::size_t f = 0; f < rank; ++f) r += w[u * rank + f] * h[i * rank + f];
      ratings.push_back({UserId(fmt::format("u{:02}", u)), ItemId(fmt::format("i{:02}", i)),
                         std::clamp(r, kMinRating, kMaxRating)});
    }
  }
  NmfParams params;
  params.d = 3;
  params.lambda = 0.0;
  params.updates = 15000;
  params.validation_fraction = 0.1;
  params.seed = 3;
  const auto model = nmf_train(ratings, params);
  bool nonnegative = true;
  for (const auto& c : model.checkpoints) nonnegative = nonnegative && c.min_factor >= 0.0;
  for (const double v : model.user_factors()) nonnegative = nonnegative && v >= 0.0;
  for (const double v : model.item_factors()) nonnegative = nonnegative && v >= 0.0;
  bool monotone = true;
  for (std::size_t c = 1; c < model.checkpoints.size(); ++c) {
    monotone = monotone && model.checkpoints[c].best_rmse <= model.checkpoints[c - 1].best_rmse;
  }
  const double elapsed = seconds_since(start);
  const double rmse = model.best_validation_rmse;
  return {rmse < 0.15 && nonnegative && monotone && elapsed < 30.0,
          fmt::format("{} ratings, validation RMSE {:.4f} after {} updates, non-negative at "
                      "{} checkpoints: {}, {:.2f} s",
                      ratings.size(), rmse, model.updates_run, model.checkpoints.size(),
                      nonnegative ? "yes" : "no", elapsed)};
}

Outcome criterion_8(const World& world, const std::filesystem::path& run_dir) {
  std::map<std::string, std::vector<std::string>> hidden;
  for (const auto& split : world.splits) {
    for (const auto& i : split.evaluation_set) {
      hidden[split.user.str()].push_back(world.catalog().at(i.item).normalized_title);
    }
  }
  std::size_t prompts = 0, leaks = 0, files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(run_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".jsonl") continue;
    ++files;
    std::ifstream in(entry.path());
    std::string line;
    while (std::getline(in, line)) {
      const auto doc = nlohmann::json::parse(line);
      if (doc.at("type") != "turn") continue;
      ++prompts;
      const auto prompt = doc.at("prompt").get<std::string>();
      for (const auto& title : hidden.at(doc.at("user").get<std::string>())) {
        if (prompt.find(title) != std::string::npos) ++leaks;
      }
    }
  }
  return {prompts > 0 && leaks == 0,
          fmt::format("{} prompts in {} transcripts scanned, {} evaluation titles found", prompts,
                      files, leaks)};
}

Outcome criterion_9() {
  convrec::testing::WorldOptions level1;
  level1.level = ContentLevel::kBasic;
  level1.users = 1;
  convrec::testing::WorldOptions level4 = level1;
  level4.level = ContentLevel::kPruned;
  const auto w1 = convrec::testing::build_world(level1);
  const auto w4 = convrec::testing::build_world(level4);
  auto median = [](const EmbeddingStore& store) {
    std::vector<double> sims;
    for (std::size_t i = 0; i < store.size(); ++i) {
      for (std::size_t j = i + 1; j < store.size(); ++j) sims.push_back(dot(store.row(i), store.row(j)));
    }
    std::nth_element(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(sims.size() / 2),
                     sims.end());
    return sims[sims.size() / 2];
  };
  const double m1 = median(w1->embeddings);
  const double m4 = median(w4->embeddings);
  return {m1 > m4, fmt::format("median pairwise similarity level 1 {:.3f}, level 4 {:.3f}", m1, m4)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const auto world = world_for(7, 10);
  const auto run_dir = scratch_dir("determinism");

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"formula oracles", criterion_1},
      {"pipeline determinism", [&] { return criterion_2(*world, run_dir); }},
      {"reprompting trend", criterion_3},
      {"baseline ordering", criterion_4},
      {"popularity-bias controls", criterion_5},
      {"matching robustness", [&] { return criterion_6(*world); }},
      {"NMF recovery", criterion_7},
      {"information hygiene", [&] { return criterion_8(*world, run_dir); }},
      {"content-level distribution shift", criterion_9},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, fmt::format("threw: {}", e.what())};
    }
    if (!outcome.pass) ++failed;
    fmt::print("{} criterion {}: {} - {}\n", outcome.pass ? "PASS" : "FAIL", i + 1,
               criteria[i].first, outcome.detail);
    std::fflush(stdout);
  }
  std::filesystem::remove_all(run_dir);
  return failed == 0 ? 0 : 1;
}
