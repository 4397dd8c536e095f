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

// convrec: corpus preparation, embedding, experiment execution and reporting.
//
// Data directory layout written by `ingest` and `embed`:
//   manifest.json       ingest parameters
//   catalog.jsonl       normalized items
//   ratings.tsv         every rating
//   splits.jsonl        E_u / F_u / T_u per sampled user
//   embeddings.jsonl    embedding cache (all levels)
//   quantiles_L<level>.jsonl   per-item thresholds for one level

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "convrec/baselines.hpp"
#include "convrec/corpus.hpp"
#include "convrec/embedding.hpp"
#include "convrec/error.hpp"
#include "convrec/experiment.hpp"
#include "convrec/llm.hpp"
#include "convrec/rng.hpp"
#include "convrec/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace convrec;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitPartialFailure = 2;
constexpr int kExitRuntime = 3;

fs::path quantile_path(const fs::path& data, ContentLevel level) {
  return data / fmt::format("quantiles_L{}.jsonl", static_cast<int>(level));
}

json read_manifest(const fs::path& data) {
  std::ifstream in(data / "manifest.json");
  if (!in) throw ConfigError(fmt::format("{} has no manifest.json; run `convrec ingest` first", data.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bad manifest.json: {}", e.what()));
  }
}

void write_manifest(const fs::path& data, const json& manifest) {
  std::ofstream out(data / "manifest.json");
  if (!out) throw DataError(fmt::format("cannot write {}", (data / "manifest.json").string()));
  out << manifest.dump(2) << '\n';
}

// Level-3 documents of the whole catalog define the level-4 pruning list.
std::map<ItemId, std::string> content_documents(const Catalog& catalog, ContentLevel level) {
  std::optional<TokenStats> stats;
  if (level == ContentLevel::kPruned) {
    std::vector<std::string> level3;
    for (const auto& item : catalog.items()) {
      level3.push_back(build_content_document(item, ContentLevel::kSupplemented));
    }
    stats = compute_token_stats(level3);
  }
  std::map<ItemId, std::string> documents;
  for (const auto& item : catalog.items()) {
    documents.emplace(item.id, build_content_document(item, level, stats ? &*stats : nullptr));
  }
  return documents;
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  fs::path out;
  SyntheticCorpusParams params;
};

void run_synth(const SynthArgs& args) {
  const auto corpus = generate_synthetic_corpus(args.params);
  fs::create_directories(args.out);
  write_synthetic_corpus(args.out, corpus);
  spdlog::info("wrote {} items and {} ratings to {}", corpus.catalog.size(),
               corpus.ratings.size(), args.out.string());
}

// ---- ingest --------------------------------------------------------------

struct IngestArgs {
  fs::path ratings;
  fs::path items;
  std::optional<fs::path> supplement;
  fs::path out;
  UserSampling sampling;
  double example_size = 10;
  double eval_size = 0.33;
  std::uint64_t seed = 0;
};

void run_ingest(const IngestArgs& args) {
  const auto ratings = load_ratings(args.ratings);
  const auto catalog = load_items(args.items, args.supplement);
  std::vector<Interaction> known;
  for (const auto& r : ratings) {
    if (catalog.find(r.item) != nullptr) known.push_back(r);
  }
  if (known.size() < ratings.size()) {
    spdlog::warn("{} ratings refer to items missing from the catalog; dropped",
                 ratings.size() - known.size());
  }
  auto sampling = args.sampling;
  sampling.seed = args.seed;
  const auto users = sample_users(known, sampling);
  const auto grouped = group_by_user(known);
  std::vector<UserSplit> splits;
  for (const auto& user : users) {
    splits.push_back(split_user(grouped.at(user), SplitSize::from_number(args.example_size),
                                SplitSize::from_number(args.eval_size),
                                derive_seed({args.seed, stable_hash(user.str())})));
  }

  fs::create_directories(args.out);
  save_catalog(args.out / "catalog.jsonl", catalog);
  save_splits(args.out / "splits.jsonl", splits);
  {
    std::ofstream out(args.out / "ratings.tsv");
    if (!out) throw DataError("cannot write ratings.tsv");
    out << "userID\titemID\trating\n";
    for (const auto& r : known) out << fmt::format("{}\t{}\t{}\n", r.user.str(), r.item.str(), r.rating);
  }
  write_manifest(args.out, {{"example_size", args.example_size},
                            {"eval_size", args.eval_size},
                            {"seed", args.seed},
                            {"users", users.size()},
                            {"items", catalog.size()},
                            {"ratings", known.size()}});
  spdlog::info("sampled {} users from {} ratings over {} items", users.size(), known.size(),
               catalog.size());
}

// ---- embed ---------------------------------------------------------------

struct EmbedArgs {
  fs::path data;
  int level = 4;
  std::string provider = "local";
  std::size_t dimension = 512;
  std::string endpoint;
  std::string model;
  std::size_t batch_size = 64;
  bool invalidate = false;
  double q = 0.99;
  std::size_t threads = 0;
};

void run_embed(const EmbedArgs& args) {
  read_manifest(args.data);
  const auto level = content_level_from_int(args.level);
  const auto catalog = load_catalog(args.data / "catalog.jsonl");
  const auto documents = content_documents(catalog, level);

  std::unique_ptr<EmbeddingProvider> provider;
  if (args.provider == "local") {
    provider = std::make_unique<LocalHashEmbedder>(args.dimension);
  } else if (args.provider == "remote") {
    RemoteEmbedderConfig config;
    config.endpoint = args.endpoint;
    config.model = args.model;
    config.dimension = args.dimension;
    config.batch_size = args.batch_size;
    provider = std::make_unique<RemoteEmbedder>(config);
  } else {
    throw ConfigError(fmt::format("unknown embedding provider '{}'", args.provider));
  }

  EmbedOptions options;
  options.cache_path = args.data / "embeddings.jsonl";
  options.invalidate = args.invalidate;
  options.batch_size = args.batch_size;
  const auto store = embed_catalog(*provider, documents, level, options);
  const auto index = build_quantile_index(store, args.q, args.threads);
  save_quantile_index(quantile_path(args.data, level), index);
  spdlog::info("{} vectors at level {} (dimension {}); thresholds at q={}", store.size(),
               args.level, store.dimension(), args.q);
}

// ---- run -----------------------------------------------------------------

struct RunArgs {
  fs::path data;
  fs::path config;
  fs::path out;
  int level = 4;
  std::string client = "simulated";
  std::string endpoint;
  std::string model;
  double requests_per_minute = 60;
  int max_retries = 5;
  std::optional<fs::path> templates;
  bool session_logs = false;
  NmfParams nmf;
  SimulatedConfig simulated;
};

int run_run(const RunArgs& args) {
  const auto config = load_experiment_config(args.config);
  const auto manifest = read_manifest(args.data);
  if (manifest.at("example_size").get<double>() != config.example_size ||
      manifest.at("eval_size").get<double>() != config.eval_size) {
    throw ConfigError(fmt::format(
        "config example_size/eval_size ({}/{}) differ from the ingested splits ({}/{})",
        config.example_size, config.eval_size, manifest.at("example_size").get<double>(),
        manifest.at("eval_size").get<double>()));
  }

  const auto level = content_level_from_int(args.level);
  const auto catalog = load_catalog(args.data / "catalog.jsonl");
  const auto splits = load_splits(args.data / "splits.jsonl");
  const auto ratings = load_ratings(args.data / "ratings.tsv");
  const auto embeddings = load_embedding_store(args.data / "embeddings.jsonl", level);
  const auto quantiles = load_quantile_index(quantile_path(args.data, level));
  if (quantiles.q() != config.q) {
    throw ConfigError(fmt::format("thresholds were built for q={}, config asks for q={}",
                                  quantiles.q(), config.q));
  }

  fs::create_directories(args.out);
  std::optional<PromptTemplates> templates;
  if (args.templates) templates = PromptTemplates::load(*args.templates);

  std::unordered_map<ItemId, std::size_t> popularity;
  for (const auto& r : ratings) ++popularity[r.item];

  std::unique_ptr<ChatClient> client;
  const bool needs_llm = std::find(config.models.begin(), config.models.end(), ModelKind::kLlm) !=
                         config.models.end();
  if (needs_llm) {
    if (args.client == "simulated") {
      client = std::make_unique<SimulatedRecommender>(catalog, embeddings, popularity,
                                                      args.simulated);
    } else if (args.client == "remote") {
      RemoteChatConfig chat;
      chat.endpoint = args.endpoint;
      chat.model = args.model;
      chat.requests_per_minute = args.requests_per_minute;
      chat.max_retries = args.max_retries;
      client = std::make_unique<RemoteChatClient>(chat);
    } else {
      throw ConfigError(fmt::format("unknown chat client '{}'", args.client));
    }
  }

  // NMF never sees the evaluation ratings of the sampled users.
  std::optional<NmfModel> nmf;
  std::optional<EmbeddingStore> factor_store;
  std::optional<QuantileIndex> factor_quantiles;
  const bool needs_nmf = std::any_of(config.models.begin(), config.models.end(), [](ModelKind m) {
    return m == ModelKind::kNmfItem || m == ModelKind::kNmfUser;
  });
  if (needs_nmf || config.judge_baselines_with_factors) {
    std::set<std::pair<UserId, ItemId>> held;
    for (const auto& split : splits) {
      for (const auto& i : split.evaluation_set) held.emplace(i.user, i.item);
    }
    std::vector<Interaction> training;
    for (const auto& r : ratings) {
      if (!held.contains({r.user, r.item})) training.push_back(r);
    }
    auto params = args.nmf;
    params.seed = config.seed;
    nmf = nmf_train(training, params);
    save_nmf(args.out / "nmf.json", *nmf);
    spdlog::info("NMF trained: {} updates, best validation RMSE {:.4f}", nmf->updates_run,
                 nmf->best_validation_rmse);
    if (config.judge_baselines_with_factors) {
      factor_store = learned_item_store(*nmf, catalog);
      factor_quantiles = build_quantile_index(*factor_store, config.q);
    }
  }

  UnmatchedLedger ledger;
  ExperimentResources resources{catalog,
                                embeddings,
                                quantiles,
                                splits,
                                client.get(),
                                nmf ? &*nmf : nullptr,
                                factor_store ? &*factor_store : nullptr,
                                factor_quantiles ? &*factor_quantiles : nullptr,
                                templates ? &*templates : nullptr,
                                &ledger};
  const RunOptions options{args.out / "transcripts", args.session_logs};
  const auto rows = run_experiment(config, resources, options);
  write_results_csv(args.out / "results.csv", rows);
  ledger.write_review_csv(args.out / "unmatched_review.csv");
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.ok; });
  spdlog::info("{} sessions, {} failed; results in {}", rows.size(), failed,
               (args.out / "results.csv").string());
  check_failures(rows, config.max_failure_rate);
  return 0;
}

// ---- report --------------------------------------------------------------

struct ReportArgs {
  fs::path run;
  std::optional<fs::path> data;
  std::optional<fs::path> out;
};

void run_report(const ReportArgs& args) {
  const auto rows = load_rows(args.run / "transcripts");
  const fs::path out = args.out.value_or(args.run);
  std::optional<Catalog> catalog;
  if (args.data) catalog = load_catalog(*args.data / "catalog.jsonl");
  fs::create_directories(out);
  write_results_csv(out / "results.csv", rows);
  write_report(out, rows, catalog ? &*catalog : nullptr);
  spdlog::info("report for {} sessions written to {}", rows.size(), out.string());
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("convrec"));

  CLI::App app{"Conversational recommender evaluation"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic clustered movie corpus");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.params.seed, "Random seed");
  synth_cmd->add_option("--users", synth.params.users, "Number of users");
  synth_cmd->add_option("--clusters", synth.params.clusters, "Top-level clusters");
  synth_cmd->add_option("--subclusters", synth.params.subclusters, "Sub-clusters per cluster");
  synth_cmd->add_option("--items-per-subcluster", synth.params.items_per_subcluster);
  synth_cmd->add_option("--min-ratings", synth.params.min_ratings, "Fewest ratings per user");
  synth_cmd->add_option("--max-ratings", synth.params.max_ratings, "Most ratings per user");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build the catalog and per-user splits");
  ingest_cmd->add_option("--ratings", ingest.ratings, "Ratings TSV")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--items", ingest.items, "Items TSV")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--supplement", ingest.supplement, "Article text JSONL")->check(CLI::ExistingFile);
  ingest_cmd->add_option("--out", ingest.out, "Data directory")->required();
  ingest_cmd->add_option("--users", ingest.sampling.count, "Users to sample");
  ingest_cmd->add_option("--lo-percentile", ingest.sampling.lo_percentile);
  ingest_cmd->add_option("--hi-percentile", ingest.sampling.hi_percentile);
  ingest_cmd->add_option("--min-total", ingest.sampling.min_total);
  ingest_cmd->add_option("--min-dislikes", ingest.sampling.min_dislikes);
  ingest_cmd->add_option("--example-size", ingest.example_size, "Count, or fraction when < 1");
  ingest_cmd->add_option("--eval-size", ingest.eval_size, "Count, or fraction when < 1");
  ingest_cmd->add_option("--seed", ingest.seed);

  EmbedArgs embed;
  auto* embed_cmd = app.add_subcommand("embed", "Embed the catalog and build similarity thresholds");
  embed_cmd->add_option("--data", embed.data, "Data directory")->required()->check(CLI::ExistingDirectory);
  embed_cmd->add_option("--level", embed.level, "Content level 1-4")->check(CLI::Range(1, 4));
  embed_cmd->add_option("--provider", embed.provider, "local or remote")
      ->check(CLI::IsMember({"local", "remote"}));
  embed_cmd->add_option("--dim", embed.dimension, "Vector dimension");
  embed_cmd->add_option("--endpoint", embed.endpoint, "Remote embeddings URL");
  embed_cmd->add_option("--model", embed.model, "Remote embedding model");
  embed_cmd->add_option("--batch-size", embed.batch_size);
  embed_cmd->add_flag("--invalidate", embed.invalidate, "Ignore cached vectors");
  embed_cmd->add_option("--q", embed.q, "Threshold quantile");
  embed_cmd->add_option("--threads", embed.threads, "0 = all cores");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Execute an experiment config");
  run_cmd->add_option("--data", run.data, "Data directory")->required()->check(CLI::ExistingDirectory);
  run_cmd->add_option("--config", run.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out, "Run directory")->required();
  run_cmd->add_option("--level", run.level, "Content level of the embeddings")->check(CLI::Range(1, 4));
  run_cmd->add_option("--client", run.client, "simulated or remote")
      ->check(CLI::IsMember({"simulated", "remote"}));
  run_cmd->add_option("--endpoint", run.endpoint, "Remote chat completions URL");
  run_cmd->add_option("--model", run.model, "Remote chat model");
  run_cmd->add_option("--rpm", run.requests_per_minute, "Remote requests per minute");
  run_cmd->add_option("--max-retries", run.max_retries, "Remote retries per request");
  run_cmd->add_option("--templates", run.templates, "Prompt template directory")
      ->check(CLI::ExistingDirectory);
  run_cmd->add_flag("--session-logs", run.session_logs, "Keep raw request/response logs");
  run_cmd->add_option("--nmf-d", run.nmf.d);
  run_cmd->add_option("--nmf-lambda", run.nmf.lambda);
  run_cmd->add_option("--nmf-alpha", run.nmf.alpha);
  run_cmd->add_option("--nmf-updates", run.nmf.updates);
  run_cmd->add_option("--sim-popularity-bias", run.simulated.popularity_bias);
  run_cmd->add_option("--sim-typo-rate", run.simulated.typo_rate);

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Aggregate a run directory");
  report_cmd->add_option("--run", report.run, "Run directory")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--data", report.data, "Data directory (adds titles)")
      ->check(CLI::ExistingDirectory);
  report_cmd->add_option("--out", report.out, "Output directory (default: the run directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*synth_cmd) run_synth(synth);
    if (*ingest_cmd) run_ingest(ingest);
    if (*embed_cmd) run_embed(embed);
    if (*run_cmd) return run_run(run);
    if (*report_cmd) run_report(report);
    return 0;
  } catch (const ExperimentFailure& e) {
    spdlog::error("{}", e.what());
    return kExitPartialFailure;
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kExitConfig;
  } catch (const AuthenticationError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    // Missing or malformed inputs: fix the data directory and rerun.
    spdlog::error("input error: {}", e.what());
    return kExitConfig;
  } catch (const ParseError& e) {
    spdlog::error("input error: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
}
