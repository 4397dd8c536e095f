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

#include "convrec/conversation.hpp"

#include <ostream>
#include <unordered_set>

#include <fmt/format.h>

#include "convrec/rng.hpp"
#include "json.hpp"

namespace convrec {

using json = nlohmann::json;

std::vector<ItemId> SessionTranscript::cumulative_items() const {
  std::vector<ItemId> items;
  for (const auto& turn : turns) {
    for (const auto& match : turn.matches) {
      if (match.matched_item) items.push_back(*match.matched_item);
    }
  }
  return items;
}

namespace {

// Returns the completion's titles, retrying once with a list-only
// instruction when the first answer has none.
std::vector<std::string> complete_turn(ChatClient& client, std::vector<ChatMessage>& history,
                                       const SessionConfig& config,
                                       const SessionResources& resources,
                                       RecommendationTurn& turn) {
  CompletionRequest request;
  request.temperature = config.temperature;
  request.seed = derive_seed({config.seed, static_cast<std::uint64_t>(turn.turn_index)});
  request.log = resources.log;
  request.turn = turn.turn_index;
  request.history = history;
  turn.completion_text = client.complete(request);
  try {
    return extract_titles(turn.completion_text);
  } catch (const ExtractionError&) {
    turn.extraction_retried = true;
  }
  history.back().content += "\n\n";
  history.back().content += kListOnlyInstruction;
  turn.prompt_text = history.back().content;
  request.history = history;
  turn.completion_text = client.complete(request);
  return extract_titles(turn.completion_text);
}

struct Feedback {
  std::vector<std::string> good;
  std::vector<std::string> bad;
};

// Liked/disliked titles of one turn's judged items. Evaluation-set items are
// held back so their titles never reach a prompt.
Feedback feedback_of(const RecommendationTurn& turn, const Catalog& catalog,
                     const std::unordered_set<ItemId>& hidden) {
  Feedback feedback;
  std::unordered_set<ItemId> named;
  for (const auto& judgment : turn.judgments) {
    if (hidden.contains(judgment.item) || !named.insert(judgment.item).second) continue;
    if (!judgment.estimated_rating) continue;
    auto& list = judgment.relevant ? feedback.good : feedback.bad;
    list.push_back(catalog.at(judgment.item).normalized_title);
  }
  return feedback;
}

MetricsReport final_report(const SessionTranscript& transcript,
                           const SessionResources& resources) {
  MetricsReport report;
  const auto& last = transcript.turns.back();
  RankedList list;
  std::vector<ItemId> final_items;
  for (const auto& judgment : last.judgments) {
    list.items.push_back({judgment.item, judgment.relevant});
    final_items.push_back(judgment.item);
  }
  report.precision = precision(list);
  report.ndcg = ndcg(list);
  report.map = average_precision(list);
  report.ils = ils(resources.embeddings, final_items);
  report.coverage = transcript.coverage_by_turn.back();
  for (const auto& turn : transcript.turns) {
    for (const auto& match : turn.matches) {
      if (match.matched()) {
        ++report.matched;
      } else {
        ++report.unmatched;
      }
    }
    report.judged += turn.judgments.size();
  }
  const auto& c = transcript.config;
  report.unmatched_ratio = unmatched_ratio(report.unmatched, c.k, c.p, c.k_f);
  return report;
}

}  // namespace

SessionTranscript run_session(const UserSplit& split, const SessionConfig& config,
                              ChatClient& client, const SessionResources& resources,
                              int replicate) {
  validate(config);
  const PromptTemplates& templates =
      resources.templates ? *resources.templates : PromptTemplates::builtin();
  const auto options = prompt_options(config);

  SessionTranscript transcript;
  transcript.user = split.user;
  transcript.replicate = replicate;
  transcript.config = config;

  std::unordered_set<ItemId> hidden;
  for (const auto& i : split.evaluation_set) hidden.insert(i.item);

  std::vector<ExampleMovie> examples;
  for (const auto& i : split.example_set) {
    examples.push_back({resources.catalog.at(i.item).normalized_title, i.positive()});
  }
  std::optional<SyntheticExample> synthetic;
  if (config.prompt_style != PromptStyle::kZero) {
    std::unordered_set<ItemId> own;
    for (const auto* set : {&split.example_set, &split.feedback_set, &split.evaluation_set}) {
      for (const auto& i : *set) own.insert(i.item);
    }
    synthetic = build_synthetic_example(resources.catalog, resources.embeddings, examples.size(),
                                        static_cast<std::size_t>(config.requested_at(1)),
                                        derive_seed({config.seed, 0}), config.prompt_style, own);
  }

  std::vector<ChatMessage> history;
  std::vector<ItemId> so_far;
  Feedback feedback;
  for (int t = 1; t <= config.p; ++t) {
    RecommendationTurn turn;
    turn.turn_index = t;
    turn.requested = config.requested_at(t);
    if (t == 1) {
      turn.prompt_text = build_initial_prompt(config, examples,
                                              synthetic ? &*synthetic : nullptr, templates);
    } else if (t < config.p) {
      turn.prompt_text = build_reprompt(feedback.good, feedback.bad, turn.requested, options,
                                        templates);
    } else {
      turn.prompt_text = build_final_prompt(feedback.good, feedback.bad, turn.requested, options,
                                            templates);
    }
    history.push_back({Role::kUser, turn.prompt_text});

    std::vector<std::string> titles;
    try {
      titles = complete_turn(client, history, config, resources, turn);
    } catch (const Error& e) {
      throw SessionError(fmt::format("user {} turn {}: {}", split.user.str(), t, e.what()),
                         transcript);
    }
    history.push_back({Role::kAssistant, turn.completion_text});
    if (titles.size() > static_cast<std::size_t>(turn.requested)) {
      titles.resize(static_cast<std::size_t>(turn.requested));
    }
    turn.extracted_titles = titles;

    const auto& reference = t < config.p ? split.feedback_set : split.evaluation_set;
    for (const auto& title : titles) {
      auto match = resources.matcher.match(title, config.title_threshold, resources.ledger);
      if (match.matched_item) {
        turn.judgments.push_back(
            judge(*match.matched_item, reference, resources.embeddings, resources.quantiles));
        so_far.push_back(*match.matched_item);
      }
      turn.matches.push_back(std::move(match));
    }
    transcript.coverage_by_turn.push_back(
        coverage(so_far, split.evaluation_set, resources.embeddings, resources.quantiles));
    feedback = feedback_of(turn, resources.catalog, hidden);
    transcript.turns.push_back(std::move(turn));
  }
  transcript.final_report = final_report(transcript, resources);
  return transcript;
}

namespace {

// Replays a fixed list as a chat answer.
class FixedListClient final : public ChatClient {
 public:
  explicit FixedListClient(std::string text) : text_(std::move(text)) {}
  std::string name() const override { return "fixed"; }
  std::string complete(const CompletionRequest&) override { return text_; }

 private:
  std::string text_;
};

}  // namespace

SessionTranscript run_recommender_session(const UserSplit& split, const SessionConfig& config,
                                          std::span<const ItemId> recommendations,
                                          const SessionResources& resources, int replicate) {
  SessionConfig single = config;
  single.p = 1;
  single.prompt_style = PromptStyle::kZero;
  std::string text;
  for (std::size_t i = 0; i < recommendations.size(); ++i) {
    text += fmt::format("{}. {}\n", i + 1, resources.catalog.at(recommendations[i]).normalized_title);
  }
  FixedListClient client(text);
  return run_session(split, single, client, resources, replicate);
}

namespace {

json optional_json(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

}  // namespace

void write_transcript(std::ostream& out, const SessionTranscript& transcript,
                      std::string_view cell, bool summary) {
  for (const auto& turn : transcript.turns) {
    json matches = json::array();
    for (const auto& m : turn.matches) {
      matches.push_back({{"raw", m.raw_title},
                         {"item", m.matched_item ? json(m.matched_item->str()) : json(nullptr)},
                         {"similarity", m.similarity},
                         {"method", to_string(m.method)}});
    }
    json judgments = json::array();
    for (const auto& j : turn.judgments) {
      judgments.push_back({{"item", j.item.str()},
                           {"estimate", optional_json(j.estimated_rating)},
                           {"relevant", j.relevant},
                           {"admitted", j.admitted_neighbors}});
    }
    const json line = {{"cell", cell},
                       {"user", transcript.user.str()},
                       {"replicate", transcript.replicate},
                       {"type", "turn"},
                       {"turn", turn.turn_index},
                       {"requested", turn.requested},
                       {"prompt", turn.prompt_text},
                       {"completion", turn.completion_text},
                       {"extraction_retried", turn.extraction_retried},
                       {"extracted", turn.extracted_titles},
                       {"matches", matches},
                       {"judgments", judgments}};
    out << line.dump() << '\n';
  }
  if (!summary) return;
  const auto& r = transcript.final_report;
  json items = json::array();
  for (const auto& item : transcript.cumulative_items()) items.push_back(item.str());
  const json last = {{"cell", cell},
                        {"user", transcript.user.str()},
                        {"replicate", transcript.replicate},
                        {"type", "summary"},
                        {"status", "ok"},
                        {"k_f", transcript.config.k_f},
                        {"precision", optional_json(r.precision)},
                        {"ndcg", optional_json(r.ndcg)},
                        {"map", optional_json(r.map)},
                        {"ils", optional_json(r.ils)},
                        {"coverage", optional_json(r.coverage)},
                        {"unmatched_ratio", optional_json(r.unmatched_ratio)},
                        {"matched", r.matched},
                        {"judged", r.judged},
                        {"unmatched", r.unmatched},
                        {"coverage_by_turn", transcript.coverage_by_turn},
                        {"recommendations", items}};
  out << last.dump() << '\n';
}

}  // namespace convrec
