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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convrec/baselines.hpp"
#include "convrec/config.hpp"
#include "convrec/conversation.hpp"
#include "convrec/corpus.hpp"
#include "convrec/embedding.hpp"
#include "convrec/llm.hpp"
#include "convrec/metrics.hpp"

namespace convrec {

enum class ModelKind { kLlm, kNmfItem, kNmfUser, kRandom };

std::string_view to_string(ModelKind model);
// "llm", "nmf-item", "nmf-user", "random". Throws ConfigError.
ModelKind model_kind_from_string(std::string_view name);

struct ExperimentConfig {
  std::string name = "experiment";
  // Blocks. Empty means every user with a split.
  std::vector<UserId> users;
  int replicates = 1;

  std::vector<PromptStyle> prompt_styles{PromptStyle::kZero};
  std::vector<int> k{10};
  std::vector<int> p{1};
  std::vector<double> temperatures{0.0};
  std::vector<bool> prompt_popular{true};
  std::vector<ModelKind> models{ModelKind::kLlm};

  int k_f = 20;
  double example_size = 10;
  double eval_size = 0.33;
  double title_threshold = 0.75;
  double q = 0.99;
  int release_cutoff = 2011;
  std::uint64_t seed = 0;

  // Judge baseline output with learned item factors instead of content
  // embeddings.
  bool judge_baselines_with_factors = false;
  std::size_t parallelism = 1;
  double max_failure_rate = 0.10;
};

// Reads the JSON form; unknown keys are errors. Throws ConfigError.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(std::string_view json_text);
void validate(const ExperimentConfig& config);

// One combination of factor levels.
struct Cell {
  std::size_t index = 0;
  ModelKind model = ModelKind::kLlm;
  SessionConfig session;  // seed unset

  // Stable identifier encoding every factor, e.g.
  // "llm_zero_k10_p5_t0_popyes".
  std::string key() const;
  // "k=10,p=5".
  std::string config_label() const;
};

// Throws ConfigError on malformed keys.
Cell parse_cell_key(std::string_view key);

// Cartesian product in config order. With p = 1 the k level is irrelevant
// and is normalized to k_f; baselines ignore every LLM factor. Duplicate
// cells are dropped, keeping the first.
std::vector<Cell> expand_grid(const ExperimentConfig& config);

std::uint64_t session_seed(std::uint64_t experiment_seed, const UserId& user, int replicate,
                           std::size_t cell_index);

struct ResultRow {
  UserId user;
  int replicate = 0;
  Cell cell;
  bool ok = false;
  std::string error;
  MetricsReport report;
  std::vector<ItemId> recommendations;  // R^P, slot order
  std::vector<double> coverage_by_turn;
};

struct ExperimentResources {
  const Catalog& catalog;
  const EmbeddingStore& embeddings;
  const QuantileIndex& quantiles;
  std::span<const UserSplit> splits;
  ChatClient* client = nullptr;                // required for llm cells
  const NmfModel* nmf = nullptr;               // required for nmf cells
  const EmbeddingStore* factor_store = nullptr;  // for judging with factors
  const QuantileIndex* factor_quantiles = nullptr;
  const PromptTemplates* templates = nullptr;
  UnmatchedLedger* ledger = nullptr;
};

struct RunOptions {
  // Transcripts go to <run_dir>/<user>/<replicate>.jsonl. Sessions whose
  // summary is already present are not rerun.
  std::optional<std::filesystem::path> run_dir;
  // Also keep a raw request/response log per transcript file.
  bool session_logs = false;
};

// Runs every (user, replicate, cell) session, then fills in novelty from
// each cell's popularity table. Session failures become failed rows. Rows
// are sorted by cell index, user and replicate.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config,
                                      const ExperimentResources& resources,
                                      const RunOptions& options = {});

// Rebuilds rows from the transcript summaries under `run_dir` and
// recomputes novelty.
std::vector<ResultRow> load_rows(const std::filesystem::path& run_dir);

// Popularity per cell from its ok rows, then novelty for each of them.
void fill_novelty(std::vector<ResultRow>& rows);

class ExperimentFailure : public Error {
 public:
  ExperimentFailure(const std::string& what, std::size_t failed, std::size_t total)
      : Error(what), failed_(failed), total_(total) {}
  std::size_t failed() const noexcept { return failed_; }
  std::size_t total() const noexcept { return total_; }

 private:
  std::size_t failed_;
  std::size_t total_;
};

// Throws ExperimentFailure when more than `max_rate` of the rows failed.
void check_failures(std::span<const ResultRow> rows, double max_rate);

// Tidy CSV, one row per session, absent metrics left empty.
void write_results_csv(std::ostream& out, std::span<const ResultRow> rows);
void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows);

struct MetricMean {
  std::optional<double> mean;
  std::size_t count = 0;
};

struct CellSummary {
  Cell cell;
  std::size_t rows = 0;
  std::size_t failed = 0;
  MetricMean precision, ndcg, map, ils, coverage, novelty, unmatched_ratio;
};

// Per-cell means over ok rows; absent metrics are skipped and counted.
std::vector<CellSummary> aggregate(std::span<const ResultRow> rows);
void write_summary_csv(const std::filesystem::path& path, std::span<const CellSummary> cells);

struct ItemFrequency {
  ItemId item;
  std::size_t sessions = 0;
  double frequency = 0.0;  // sessions / total sessions
};

struct CellPopularity {
  Cell cell;
  std::size_t sessions = 0;
  std::optional<double> mean_novelty;
  double max_frequency = 0.0;
  std::vector<ItemFrequency> items;  // descending
};

struct PopularityReport {
  std::size_t sessions = 0;
  std::vector<ItemFrequency> items;  // whole experiment, descending
  std::vector<CellPopularity> cells;
};

// Over successful sessions only.
PopularityReport popularity_report(std::span<const ResultRow> rows);

// popularity.csv plus plotdata/ (frequency by rank per cell, coverage by
// turn, per-cell metric means).
void write_report(const std::filesystem::path& out_dir, std::span<const ResultRow> rows,
                  const Catalog* catalog = nullptr);

}  // namespace convrec
