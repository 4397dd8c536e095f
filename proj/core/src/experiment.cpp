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

#include "convrec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "convrec/error.hpp"
#include "convrec/rng.hpp"
#include "json.hpp"

namespace convrec {

using json = nlohmann::json;

std::string_view to_string(ModelKind model) {
  switch (model) {
    case ModelKind::kLlm:
      return "llm";
    case ModelKind::kNmfItem:
      return "nmf-item";
    case ModelKind::kNmfUser:
      return "nmf-user";
    case ModelKind::kRandom:
      return "random";
  }
  return "llm";
}

ModelKind model_kind_from_string(std::string_view name) {
  for (const auto m : {ModelKind::kLlm, ModelKind::kNmfItem, ModelKind::kNmfUser,
                       ModelKind::kRandom}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError(fmt::format("unknown model '{}' (llm, nmf-item, nmf-user, random)", name));
}

namespace {

template <class T, class F>
std::vector<T> list_of(const json& value, F convert) {
  std::vector<T> out;
  if (value.is_array()) {
    for (const auto& v : value) out.push_back(convert(v));
  } else {
    out.push_back(convert(value));
  }
  return out;
}

bool yes_no(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  const auto s = v.get<std::string>();
  if (s == "yes") return true;
  if (s == "no") return false;
  throw ConfigError(fmt::format("prompt_popular must be yes/no, got '{}'", s));
}

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("experiment config is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw ConfigError("experiment config must be a JSON object");
  static const std::unordered_set<std::string> known = {
      "name",          "users",          "replicates",   "prompt_style",
      "k",             "p",              "temperature",  "prompt_popular",
      "model",         "k_f",            "example_size", "eval_size",
      "title_threshold", "q",            "release_cutoff", "seed",
      "judge_baselines_with_factors",    "parallelism",  "max_failure_rate"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
  ExperimentConfig c;
  try {
    c.name = doc.value("name", c.name);
    if (doc.contains("users")) {
      c.users = list_of<UserId>(doc["users"],
                                [](const json& v) { return UserId(v.get<std::string>()); });
    }
    c.replicates = doc.value("replicates", c.replicates);
    if (doc.contains("prompt_style")) {
      c.prompt_styles = list_of<PromptStyle>(doc["prompt_style"], [](const json& v) {
        return prompt_style_from_string(v.get<std::string>());
      });
    }
    if (doc.contains("k")) c.k = list_of<int>(doc["k"], [](const json& v) { return v.get<int>(); });
    if (doc.contains("p")) c.p = list_of<int>(doc["p"], [](const json& v) { return v.get<int>(); });
    if (doc.contains("temperature")) {
      c.temperatures =
          list_of<double>(doc["temperature"], [](const json& v) { return v.get<double>(); });
    }
    if (doc.contains("prompt_popular")) c.prompt_popular = list_of<bool>(doc["prompt_popular"], yes_no);
    if (doc.contains("model")) {
      c.models = list_of<ModelKind>(doc["model"], [](const json& v) {
        return model_kind_from_string(v.get<std::string>());
      });
    }
    c.k_f = doc.value("k_f", c.k_f);
    c.example_size = doc.value("example_size", c.example_size);
    c.eval_size = doc.value("eval_size", c.eval_size);
    c.title_threshold = doc.value("title_threshold", c.title_threshold);
    c.q = doc.value("q", c.q);
    c.release_cutoff = doc.value("release_cutoff", c.release_cutoff);
    c.seed = doc.value("seed", c.seed);
    c.judge_baselines_with_factors =
        doc.value("judge_baselines_with_factors", c.judge_baselines_with_factors);
    c.parallelism = doc.value("parallelism", c.parallelism);
    c.max_failure_rate = doc.value("max_failure_rate", c.max_failure_rate);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bad experiment config value: {}", e.what()));
  }
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open experiment config {}", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str());
}

void validate(const ExperimentConfig& config) {
  if (config.replicates < 1) throw ConfigError("replicates must be at least 1");
  if (config.prompt_styles.empty() || config.k.empty() || config.p.empty() ||
      config.temperatures.empty() || config.prompt_popular.empty() || config.models.empty()) {
    throw ConfigError("every factor needs at least one level");
  }
  if (config.parallelism < 1) throw ConfigError("parallelism must be at least 1");
  if (!(config.max_failure_rate >= 0.0 && config.max_failure_rate <= 1.0)) {
    throw ConfigError("max_failure_rate must lie in [0, 1]");
  }
  for (const auto& cell : expand_grid(config)) validate(cell.session);
}

std::string Cell::key() const {
  return fmt::format("{}_{}_k{}_p{}_t{}_pop{}", to_string(model), to_string(session.prompt_style),
                     session.k, session.p, format_double(session.temperature),
                     session.prompt_popular ? "yes" : "no");
}

std::string Cell::config_label() const { return fmt::format("k={},p={}", session.k, session.p); }

Cell parse_cell_key(std::string_view key) {
  static const std::regex pattern(
      R"(^(llm|nmf-item|nmf-user|random)_(zero|few|cot)_k(\d+)_p(\d+)_t([0-9.eE+-]+)_pop(yes|no)$)");
  const std::string s(key);
  std::smatch m;
  if (!std::regex_match(s, m, pattern)) {
    throw ConfigError(fmt::format("malformed cell key '{}'", key));
  }
  Cell cell;
  cell.model = model_kind_from_string(m[1].str());
  cell.session.prompt_style = prompt_style_from_string(m[2].str());
  cell.session.k = std::stoi(m[3].str());
  cell.session.p = std::stoi(m[4].str());
  cell.session.temperature = std::stod(m[5].str());
  cell.session.prompt_popular = m[6].str() == "yes";
  return cell;
}

std::vector<Cell> expand_grid(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  std::unordered_set<std::string> seen;
  auto add = [&](Cell cell) {
    if (!seen.insert(cell.key()).second) return;
    cell.index = cells.size();
    cells.push_back(std::move(cell));
  };
  SessionConfig base;
  base.k_f = config.k_f;
  base.title_threshold = config.title_threshold;
  base.q = config.q;
  base.release_cutoff = config.release_cutoff;
  for (const auto model : config.models) {
    if (model != ModelKind::kLlm) {
      Cell cell;
      cell.model = model;
      cell.session = base;
      cell.session.p = 1;
      cell.session.k = config.k_f;
      add(cell);
      continue;
    }
    for (const auto style : config.prompt_styles) {
      for (const int k : config.k) {
        for (const int p : config.p) {
          for (const double t : config.temperatures) {
            for (const bool popular : config.prompt_popular) {
              Cell cell;
              cell.model = model;
              cell.session = base;
              cell.session.prompt_style = style;
              cell.session.k = p == 1 ? config.k_f : k;
              cell.session.p = p;
              cell.session.temperature = t;
              cell.session.prompt_popular = popular;
              add(cell);
            }
          }
        }
      }
    }
  }
  return cells;
}

std::uint64_t session_seed(std::uint64_t experiment_seed, const UserId& user, int replicate,
                           std::size_t cell_index) {
  return derive_seed({experiment_seed, stable_hash(user.str()),
                      static_cast<std::uint64_t>(replicate),
                      static_cast<std::uint64_t>(cell_index)});
}

namespace {

std::optional<double> optional_from(const json& doc, const char* key) {
  if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
  return doc[key].get<double>();
}

ResultRow row_from_summary(const json& summary, const Cell& cell) {
  ResultRow row;
  row.user = UserId(summary.at("user").get<std::string>());
  row.replicate = summary.at("replicate").get<int>();
  row.cell = cell;
  row.ok = summary.at("status").get<std::string>() == "ok";
  row.error = summary.value("error", "");
  if (!row.ok) return row;
  auto& r = row.report;
  r.precision = optional_from(summary, "precision");
  r.ndcg = optional_from(summary, "ndcg");
  r.map = optional_from(summary, "map");
  r.ils = optional_from(summary, "ils");
  r.coverage = optional_from(summary, "coverage");
  r.unmatched_ratio = optional_from(summary, "unmatched_ratio");
  r.matched = summary.value("matched", std::size_t{0});
  r.judged = summary.value("judged", std::size_t{0});
  r.unmatched = summary.value("unmatched", std::size_t{0});
  for (const auto& item : summary.at("recommendations")) {
    row.recommendations.emplace_back(item.get<std::string>());
  }
  row.coverage_by_turn = summary.at("coverage_by_turn").get<std::vector<double>>();
  return row;
}

std::string failed_summary(const UserId& user, int replicate, const Cell& cell,
                           const std::string& error) {
  const json line = {{"cell", cell.key()},   {"user", user.str()},   {"replicate", replicate},
                     {"type", "summary"},    {"status", "failed"},   {"k_f", cell.session.k_f},
                     {"error", error}};
  return line.dump() + "\n";
}

// Summary lines of the cells finished in an earlier run, keyed by cell.
std::map<std::string, json> completed_cells(const std::filesystem::path& path,
                                            std::vector<std::string>& kept_lines) {
  std::map<std::string, json> done;
  std::ifstream in(path);
  if (!in) return done;
  std::vector<std::pair<std::string, std::string>> lines;  // cell, raw line
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto doc = json::parse(line);
      const auto cell = doc.at("cell").get<std::string>();
      lines.emplace_back(cell, line);
      if (doc.value("type", "") == "summary" && doc.value("status", "") == "ok") {
        done[cell] = doc;
      }
    } catch (const json::exception&) {
      // A line cut short by an interruption; its session reruns.
    }
  }
  for (const auto& [cell, raw] : lines) {
    if (done.contains(cell)) kept_lines.push_back(raw);
  }
  return done;
}

ResultRow row_from_transcript(const SessionTranscript& transcript, const Cell& cell) {
  ResultRow row;
  row.user = transcript.user;
  row.replicate = transcript.replicate;
  row.cell = cell;
  row.ok = true;
  row.report = transcript.final_report;
  row.recommendations = transcript.cumulative_items();
  row.coverage_by_turn = transcript.coverage_by_turn;
  return row;
}

bool row_order(const ResultRow& a, const ResultRow& b) {
  if (a.cell.index != b.cell.index) return a.cell.index < b.cell.index;
  if (a.user != b.user) return a.user < b.user;
  return a.replicate < b.replicate;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config,
                                      const ExperimentResources& resources,
                                      const RunOptions& options) {
  validate(config);
  const auto cells = expand_grid(config);
  for (const auto& cell : cells) {
    if (cell.model == ModelKind::kLlm && resources.client == nullptr) {
      throw ConfigError("llm cells need a chat client");
    }
    if ((cell.model == ModelKind::kNmfItem || cell.model == ModelKind::kNmfUser) &&
        resources.nmf == nullptr) {
      throw ConfigError("nmf cells need a trained NMF model");
    }
    validate(cell.session, resources.catalog.max_year());
  }
  const bool factor_judging = config.judge_baselines_with_factors;
  if (factor_judging && (resources.factor_store == nullptr || resources.factor_quantiles == nullptr)) {
    throw ConfigError("judging baselines with factors needs a factor store and thresholds");
  }

  std::map<UserId, const UserSplit*> split_of;
  for (const auto& split : resources.splits) split_of[split.user] = &split;
  std::vector<UserId> users = config.users;
  if (users.empty()) {
    for (const auto& [user, split] : split_of) users.push_back(user);
  }
  for (const auto& user : users) {
    if (!split_of.contains(user)) {
      throw ConfigError(fmt::format("user {} has no split", user.str()));
    }
  }

  const TitleMatcher matcher(resources.catalog);

  struct Unit {
    UserId user;
    int replicate;
  };
  std::vector<Unit> units;
  for (const auto& user : users) {
    for (int r = 0; r < config.replicates; ++r) units.push_back({user, r});
  }

  std::mutex rows_mutex;
  std::vector<ResultRow> rows;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{0};

  auto run_unit = [&](const Unit& unit) {
    const UserSplit& split = *split_of.at(unit.user);
    std::optional<std::ofstream> out;
    std::optional<SessionLog> log;
    std::map<std::string, json> done;
    if (options.run_dir) {
      const auto dir = *options.run_dir / unit.user.str();
      std::filesystem::create_directories(dir);
      const auto path = dir / fmt::format("{}.jsonl", unit.replicate);
      std::vector<std::string> kept;
      done = completed_cells(path, kept);
      out.emplace(path, std::ios::trunc);
      if (!*out) throw DataError(fmt::format("cannot write {}", path.string()));
      for (const auto& line : kept) *out << line << '\n';
      out->flush();
      if (options.session_logs) log.emplace(dir / fmt::format("{}.log.jsonl", unit.replicate));
    }

    std::vector<ResultRow> local;
    for (const auto& cell : cells) {
      const auto key = cell.key();
      if (const auto it = done.find(key); it != done.end()) {
        local.push_back(row_from_summary(it->second, cell));
        continue;
      }
      SessionConfig session = cell.session;
      session.seed = session_seed(config.seed, unit.user, unit.replicate, cell.index);
      const bool by_factors = cell.model != ModelKind::kLlm && factor_judging;
      const SessionResources judge_with{
          resources.catalog,
          by_factors ? *resources.factor_store : resources.embeddings,
          by_factors ? *resources.factor_quantiles : resources.quantiles,
          matcher,
          resources.ledger,
          resources.templates,
          log ? &*log : nullptr};
      std::ostringstream transcript_text;
      try {
        SessionTranscript transcript;
        if (cell.model == ModelKind::kLlm) {
          transcript = run_session(split, session, *resources.client, judge_with, unit.replicate);
        } else {
          std::unordered_set<ItemId> known;
          for (const auto& i : split.example_set) known.insert(i.item);
          for (const auto& i : split.feedback_set) known.insert(i.item);
          const auto k_f = static_cast<std::size_t>(session.k_f);
          std::vector<ItemId> recs;
          switch (cell.model) {
            case ModelKind::kNmfItem:
              recs = nmf_item_recommend(*resources.nmf, split, k_f);
              break;
            case ModelKind::kNmfUser:
              recs = nmf_user_recommend(*resources.nmf, split.user, k_f, known);
              break;
            case ModelKind::kRandom:
              recs = random_recommend(resources.catalog, k_f, session.seed, known);
              break;
            case ModelKind::kLlm:
              break;
          }
          transcript = run_recommender_session(split, session, recs, judge_with, unit.replicate);
        }
        write_transcript(transcript_text, transcript, key);
        local.push_back(row_from_transcript(transcript, cell));
      } catch (const Error& e) {
        spdlog::warn("session {} / {} / {} failed: {}", unit.user.str(), unit.replicate, key,
                     e.what());
        if (const auto* se = dynamic_cast<const SessionError*>(&e)) {
          write_transcript(transcript_text, se->transcript(), key, false);
        }
        transcript_text << failed_summary(unit.user, unit.replicate, cell, e.what());
        ResultRow row;
        row.user = unit.user;
        row.replicate = unit.replicate;
        row.cell = cell;
        row.error = e.what();
        local.push_back(std::move(row));
      }
      if (out) {
        *out << transcript_text.str();
        out->flush();
      }
    }
    std::lock_guard lock(rows_mutex);
    for (auto& row : local) rows.push_back(std::move(row));
  };

  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t n = next.fetch_add(1);
      if (n >= units.size()) return;
      try {
        run_unit(units[n]);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next = units.size();
        return;
      }
      const auto count = ++finished;
      spdlog::debug("{}/{} user-replicate blocks finished", count, units.size());
    }
  };
  const std::size_t threads = std::min(config.parallelism, std::max<std::size_t>(units.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  std::sort(rows.begin(), rows.end(), row_order);
  fill_novelty(rows);
  return rows;
}

std::vector<ResultRow> load_rows(const std::filesystem::path& run_dir) {
  if (!std::filesystem::is_directory(run_dir)) {
    throw ConfigError(fmt::format("run directory {} does not exist", run_dir.string()));
  }
  std::vector<std::pair<json, Cell>> summaries;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(run_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.ends_with(".jsonl") && !name.ends_with(".log.jsonl")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::set<std::string> keys;
  for (const auto& path : files) {
    std::ifstream in(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json doc;
      try {
        doc = json::parse(line);
      } catch (const json::exception& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()), line_no);
      }
      if (doc.value("type", "") != "summary") continue;
      auto cell = parse_cell_key(doc.at("cell").get<std::string>());
      // The key omits k_f, which novelty needs for the slot count.
      cell.session.k_f = doc.value("k_f", cell.session.k_f);
      keys.insert(cell.key());
      summaries.emplace_back(std::move(doc), cell);
    }
  }
  std::map<std::string, std::size_t> index;
  for (const auto& key : keys) index.emplace(key, index.size());
  std::vector<ResultRow> rows;
  for (auto& [doc, cell] : summaries) {
    cell.index = index.at(cell.key());
    rows.push_back(row_from_summary(doc, cell));
  }
  std::sort(rows.begin(), rows.end(), row_order);
  fill_novelty(rows);
  return rows;
}

void fill_novelty(std::vector<ResultRow>& rows) {
  // Failed sessions produced no list and are left out of the popularity
  // denominators.
  std::map<std::size_t, std::vector<ResultRow*>> by_cell;
  for (auto& row : rows) {
    if (row.ok) by_cell[row.cell.index].push_back(&row);
  }
  for (auto& [index, cell_rows] : by_cell) {
    std::vector<std::vector<ItemId>> sessions;
    for (const auto* row : cell_rows) sessions.push_back(row->recommendations);
    const auto table = popularity_table(sessions);
    for (auto* row : cell_rows) {
      const auto slots = static_cast<std::size_t>(row->cell.session.total_slots());
      row->report.novelty = novelty(row->recommendations, table, slots);
    }
  }
}

void check_failures(std::span<const ResultRow> rows, double max_rate) {
  const auto failed = static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.ok; }));
  if (rows.empty()) return;
  const double rate = static_cast<double>(failed) / static_cast<double>(rows.size());
  if (rate > max_rate) {
    throw ExperimentFailure(fmt::format("{} of {} sessions failed ({:.1f}% > {:.1f}%)", failed,
                                        rows.size(), 100.0 * rate, 100.0 * max_rate),
                            failed, rows.size());
  }
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << "user,replicate,cell,model,prompt_style,k,p,k_f,temperature,prompt_popular,config,"
         "status,precision,ndcg,map,ils,coverage,novelty,unmatched_ratio,matched,judged,"
         "unmatched,error\n";
  for (const auto& row : rows) {
    const auto& s = row.cell.session;
    const auto& r = row.report;
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                       csv_field(row.user.str()), row.replicate, row.cell.key(),
                       to_string(row.cell.model), to_string(s.prompt_style), s.k, s.p, s.k_f,
                       format_double(s.temperature), s.prompt_popular ? "yes" : "no",
                       csv_field(row.cell.config_label()), row.ok ? "ok" : "failed",
                       opt(r.precision), opt(r.ndcg), opt(r.map), opt(r.ils), opt(r.coverage),
                       opt(r.novelty), opt(r.unmatched_ratio), r.matched, r.judged, r.unmatched,
                       csv_field(row.error));
  }
}

void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  write_results_csv(out, rows);
}

std::vector<CellSummary> aggregate(std::span<const ResultRow> rows) {
  std::map<std::size_t, CellSummary> cells;
  struct Sums {
    double precision = 0, ndcg = 0, map = 0, ils = 0, coverage = 0, novelty = 0, ur = 0;
  };
  std::map<std::size_t, Sums> sums;
  for (const auto& row : rows) {
    auto& c = cells[row.cell.index];
    c.cell = row.cell;
    ++c.rows;
    if (!row.ok) {
      ++c.failed;
      continue;
    }
    auto& s = sums[row.cell.index];
    const auto add = [](MetricMean& m, double& sum, const std::optional<double>& v) {
      if (!v) return;
      sum += *v;
      ++m.count;
    };
    add(c.precision, s.precision, row.report.precision);
    add(c.ndcg, s.ndcg, row.report.ndcg);
    add(c.map, s.map, row.report.map);
    add(c.ils, s.ils, row.report.ils);
    add(c.coverage, s.coverage, row.report.coverage);
    add(c.novelty, s.novelty, row.report.novelty);
    add(c.unmatched_ratio, s.ur, row.report.unmatched_ratio);
  }
  std::vector<CellSummary> out;
  for (auto& [index, c] : cells) {
    const auto& s = sums[index];
    const std::size_t ok = c.rows - c.failed;
    const auto finish = [&](MetricMean& m, double sum, const char* name) {
      if (m.count > 0) m.mean = sum / static_cast<double>(m.count);
      if (m.count < ok) {
        spdlog::warn("cell {}: {} is absent in {} of {} sessions", c.cell.key(), name,
                     ok - m.count, ok);
      }
    };
    finish(c.precision, s.precision, "precision");
    finish(c.ndcg, s.ndcg, "ndcg");
    finish(c.map, s.map, "map");
    finish(c.ils, s.ils, "ils");
    finish(c.coverage, s.coverage, "coverage");
    finish(c.novelty, s.novelty, "novelty");
    finish(c.unmatched_ratio, s.ur, "unmatched_ratio");
    if (ok == 0) spdlog::warn("cell {} has no successful session", c.cell.key());
    out.push_back(c);
  }
  return out;
}

void write_summary_csv(const std::filesystem::path& path, std::span<const CellSummary> cells) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out << "cell,model,prompt_style,k,p,temperature,prompt_popular,config,rows,failed";
  for (const char* m : {"precision", "ndcg", "map", "ils", "coverage", "novelty",
                        "unmatched_ratio"}) {
    out << ',' << m << ',' << m << "_n";
  }
  out << '\n';
  for (const auto& c : cells) {
    const auto& s = c.cell.session;
    out << fmt::format("{},{},{},{},{},{},{},{},{},{}", c.cell.key(), to_string(c.cell.model),
                       to_string(s.prompt_style), s.k, s.p, format_double(s.temperature),
                       s.prompt_popular ? "yes" : "no", csv_field(c.cell.config_label()), c.rows,
                       c.failed);
    for (const auto* m : {&c.precision, &c.ndcg, &c.map, &c.ils, &c.coverage, &c.novelty,
                          &c.unmatched_ratio}) {
      out << ',' << opt(m->mean) << ',' << m->count;
    }
    out << '\n';
  }
}

namespace {

std::vector<ItemFrequency> frequencies(const std::vector<const ResultRow*>& rows) {
  std::map<ItemId, std::size_t> counts;
  for (const auto* row : rows) {
    const std::set<ItemId> unique(row->recommendations.begin(), row->recommendations.end());
    for (const auto& item : unique) ++counts[item];
  }
  std::vector<ItemFrequency> out;
  for (const auto& [item, n] : counts) {
    out.push_back({item, n, static_cast<double>(n) / static_cast<double>(rows.size())});
  }
  std::sort(out.begin(), out.end(), [](const ItemFrequency& a, const ItemFrequency& b) {
    return a.sessions != b.sessions ? a.sessions > b.sessions : a.item < b.item;
  });
  return out;
}

}  // namespace

PopularityReport popularity_report(std::span<const ResultRow> rows) {
  PopularityReport report;
  std::vector<const ResultRow*> all;
  std::map<std::size_t, std::vector<const ResultRow*>> by_cell;
  for (const auto& row : rows) {
    if (!row.ok) continue;
    all.push_back(&row);
    by_cell[row.cell.index].push_back(&row);
  }
  report.sessions = all.size();
  report.items = frequencies(all);
  for (const auto& [index, cell_rows] : by_cell) {
    CellPopularity cell;
    cell.cell = cell_rows.front()->cell;
    cell.sessions = cell_rows.size();
    cell.items = frequencies(cell_rows);
    cell.max_frequency = cell.items.empty() ? 0.0 : cell.items.front().frequency;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto* row : cell_rows) {
      if (row->report.novelty) {
        sum += *row->report.novelty;
        ++n;
      }
    }
    if (n > 0) cell.mean_novelty = sum / static_cast<double>(n);
    report.cells.push_back(std::move(cell));
  }
  return report;
}

void write_report(const std::filesystem::path& out_dir, std::span<const ResultRow> rows,
                  const Catalog* catalog) {
  std::filesystem::create_directories(out_dir / "plotdata");
  const auto report = popularity_report(rows);
  const auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
    return out;
  };

  auto popularity = open(out_dir / "popularity.csv");
  popularity << "rank,item_id,title,sessions,frequency\n";
  for (std::size_t r = 0; r < report.items.size(); ++r) {
    const auto& f = report.items[r];
    const Item* item = catalog ? catalog->find(f.item) : nullptr;
    popularity << fmt::format("{},{},{},{},{}\n", r + 1, csv_field(f.item.str()),
                              csv_field(item ? item->normalized_title : ""), f.sessions,
                              format_double(f.frequency));
  }

  const auto summaries = aggregate(rows);
  write_summary_csv(out_dir / "summary.csv", summaries);

  auto by_rank = open(out_dir / "plotdata" / "frequency_by_rank.csv");
  by_rank << "cell,rank,frequency\n";
  auto novelty = open(out_dir / "plotdata" / "novelty_by_cell.csv");
  novelty << "cell,sessions,mean_novelty,max_frequency\n";
  for (const auto& cell : report.cells) {
    for (std::size_t r = 0; r < cell.items.size(); ++r) {
      by_rank << fmt::format("{},{},{}\n", cell.cell.key(), r + 1,
                             format_double(cell.items[r].frequency));
    }
    novelty << fmt::format("{},{},{},{}\n", cell.cell.key(), cell.sessions,
                           opt(cell.mean_novelty), format_double(cell.max_frequency));
  }

  auto coverage = open(out_dir / "plotdata" / "coverage_by_turn.csv");
  coverage << "cell,turn,mean_coverage,sessions\n";
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> turns;
  std::map<std::size_t, Cell> cell_of;
  for (const auto& row : rows) {
    cell_of[row.cell.index] = row.cell;
    for (std::size_t t = 0; t < row.coverage_by_turn.size(); ++t) {
      auto& [sum, n] = turns[{row.cell.index, t + 1}];
      sum += row.coverage_by_turn[t];
      ++n;
    }
  }
  for (const auto& [key, value] : turns) {
    coverage << fmt::format("{},{},{},{}\n", cell_of.at(key.first).key(), key.second,
                            format_double(value.first / static_cast<double>(value.second)),
                            value.second);
  }

  auto precision = open(out_dir / "plotdata" / "precision_by_cell.csv");
  precision << "cell,config,precision,ndcg,map\n";
  for (const auto& c : summaries) {
    precision << fmt::format("{},{},{},{},{}\n", c.cell.key(), csv_field(c.cell.config_label()),
                             opt(c.precision.mean), opt(c.ndcg.mean), opt(c.map.mean));
  }
}

}  // namespace convrec
