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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "convrec/config.hpp"
#include "convrec/corpus.hpp"
#include "convrec/embedding.hpp"

namespace convrec {

// The sentence appended to requests when prompt_popular is "no".
inline constexpr std::string_view kLessPopularInstruction =
    "Try to recommend movies that are less popular.";

// Named prompt templates (see templates/README.md for the placeholders).
class PromptTemplates {
 public:
  // The set compiled from templates/ at build time.
  static const PromptTemplates& builtin();
  // Loads every *.txt in `dir`; missing names fall back to the built-ins.
  static PromptTemplates load(const std::filesystem::path& dir);

  // Throws ConfigError for an unknown name.
  const std::string& get(std::string_view name) const;

 private:
  std::map<std::string, std::string, std::less<>> sources_;
};

// Replaces each {name} with values[name]; "{{" is a literal '{'. Throws
// ConfigError for unknown placeholders or malformed braces.
std::string render_template(std::string_view tpl,
                            const std::map<std::string, std::string, std::less<>>& values);

struct ExampleMovie {
  std::string title;
  bool liked = false;
};

// One-shot / chain-of-thought demonstration built from fake preferences.
struct SyntheticExample {
  std::vector<ExampleMovie> movies;
  std::vector<std::string> recommendations;  // ranked
  std::vector<std::string> reasoning;        // "step i: ..." lines, cot only
};

// Options shared by every prompt of a session.
struct PromptOptions {
  int release_cutoff = 2011;
  bool prompt_popular = true;
};

PromptOptions prompt_options(const SessionConfig& config);

// Rendered "- Title (Year) [liked]" lines.
std::string render_movie_lines(std::span<const ExampleMovie> movies);

// Requests config.requested_at(1) items. `synthetic` is required for the few
// and cot styles and ignored for zero.
std::string build_initial_prompt(const SessionConfig& config, std::span<const ExampleMovie> examples,
                                 const SyntheticExample* synthetic = nullptr,
                                 const PromptTemplates& templates = PromptTemplates::builtin());

// Samples a taste anchor, marks the anchor's nearest items as liked and
// far-away items as disliked, then demonstrates the k items nearest the
// liked mean. `exclude` items never appear. Throws ConfigError for the zero
// style and DataError when the catalog is too small.
SyntheticExample build_synthetic_example(const Catalog& catalog, const EmbeddingStore& embeddings,
                                         std::size_t example_count, std::size_t k,
                                         std::uint64_t seed, PromptStyle style,
                                         const std::unordered_set<ItemId>& exclude = {});

// Feedback block naming liked and disliked titles; the "could not be
// evaluated" block when both are empty.
std::string build_feedback(std::span<const std::string> good, std::span<const std::string> bad,
                           const PromptTemplates& templates = PromptTemplates::builtin());

// Feedback plus a request for k new items that forbids repeats.
std::string build_reprompt(std::span<const std::string> good, std::span<const std::string> bad,
                           int k, const PromptOptions& options = {},
                           const PromptTemplates& templates = PromptTemplates::builtin());

// Final-list request for k_f items; repeats of earlier recommendations are
// allowed.
std::string build_final_prompt(int k_f, const PromptOptions& options = {},
                               const PromptTemplates& templates = PromptTemplates::builtin());

// Final-list request preceded by feedback on the previous turn.
std::string build_final_prompt(std::span<const std::string> good, std::span<const std::string> bad,
                               int k_f, const PromptOptions& options = {},
                               const PromptTemplates& templates = PromptTemplates::builtin());

}  // namespace convrec
