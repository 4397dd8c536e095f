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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convrec/config.hpp"
#include "convrec/corpus.hpp"
#include "convrec/embedding.hpp"
#include "convrec/error.hpp"
#include "convrec/llm.hpp"
#include "convrec/matching.hpp"
#include "convrec/metrics.hpp"
#include "convrec/prompts.hpp"
#include "convrec/relevancy.hpp"

namespace convrec {

// Raw titles from lines starting "<n>." or "<n>)", in order. Anything after
// the "(YYYY)" year parenthesis that follows " - ", " — " or ": " is
// dropped. Throws ExtractionError when a nonempty completion has no list.
std::vector<std::string> extract_titles(std::string_view completion);

// Appended to a prompt whose completion could not be parsed.
inline constexpr std::string_view kListOnlyInstruction =
    "Respond only with a numbered list in the format \"1. Title (Year)\".";

struct RecommendationTurn {
  int turn_index = 0;  // 1-based
  int requested = 0;
  std::string prompt_text;
  std::string completion_text;
  bool extraction_retried = false;
  std::vector<std::string> extracted_titles;
  std::vector<MatchResult> matches;
  // One per matched title, in list order.
  std::vector<RelevanceJudgment> judgments;
};

struct SessionTranscript {
  UserId user;
  int replicate = 0;
  SessionConfig config;
  std::vector<RecommendationTurn> turns;
  MetricsReport final_report;
  // Coverage of T_u by the recommendations of turns 1..i.
  std::vector<double> coverage_by_turn;

  // Matched items of every turn in slot order, repeats kept (R^P).
  std::vector<ItemId> cumulative_items() const;
};

// A session that failed mid-way; transcript() holds the completed turns.
class SessionError : public Error {
 public:
  SessionError(const std::string& what, SessionTranscript partial)
      : Error(what), partial_(std::move(partial)) {}
  const SessionTranscript& transcript() const noexcept { return partial_; }

 private:
  SessionTranscript partial_;
};

// Read-only data shared by concurrent sessions.
struct SessionResources {
  const Catalog& catalog;
  // Used for relevancy, coverage, ILS and synthetic examples.
  const EmbeddingStore& embeddings;
  const QuantileIndex& quantiles;
  const TitleMatcher& matcher;
  UnmatchedLedger* ledger = nullptr;
  const PromptTemplates* templates = nullptr;  // built-ins when null
  SessionLog* log = nullptr;
};

// Runs the p-turn conversation: turns before the last are judged against
// F_u and fed back; the last turn asks for k_f items and is judged against
// T_u. Items of T_u are never named in a prompt. Novelty is left unset.
// Client and extraction failures throw SessionError.
SessionTranscript run_session(const UserSplit& split, const SessionConfig& config,
                              ChatClient& client, const SessionResources& resources,
                              int replicate = 0);

// Scores a fixed ranked list (a baseline's output) through the same
// extraction, matching and judgment path as a one-turn session.
SessionTranscript run_recommender_session(const UserSplit& split, const SessionConfig& config,
                                          std::span<const ItemId> recommendations,
                                          const SessionResources& resources, int replicate = 0);

// Transcript JSONL: one object per turn, then (when `summary` is set) one
// {"type": "summary"} object with the metrics and R^P. Every object carries
// `cell`.
void write_transcript(std::ostream& out, const SessionTranscript& transcript,
                      std::string_view cell, bool summary = true);

}  // namespace convrec
