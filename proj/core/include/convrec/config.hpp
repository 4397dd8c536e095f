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

#include <cstdint>
#include <string>
#include <string_view>

namespace convrec {

enum class PromptStyle { kZero, kFew, kCot };

std::string_view to_string(PromptStyle style);
// Accepts "zero", "few" (or "one"), "cot" in any case. Throws ConfigError.
PromptStyle prompt_style_from_string(std::string_view name);

// Parameters of one simulated conversation.
struct SessionConfig {
  int k = 10;          // recommendations per intermediate prompt
  int k_f = 20;        // recommendations in the final list
  int p = 1;           // prompts, including the initial one
  PromptStyle prompt_style = PromptStyle::kZero;
  int release_cutoff = 2011;
  bool prompt_popular = true;
  double temperature = 0.0;
  double title_threshold = 0.75;
  double q = 0.99;
  std::uint64_t seed = 0;

  // Items requested at turn `turn` (1-based): k before the last prompt, k_f
  // at the last one (so p = 1 asks for k_f directly).
  int requested_at(int turn) const noexcept { return turn < p ? k : k_f; }
  // k(p-1) + k_f.
  int total_slots() const noexcept { return k * (p - 1) + k_f; }
};

// Throws ConfigError when an invariant is violated. `catalog_max_year` <= 0
// skips the release cutoff check.
void validate(const SessionConfig& config, int catalog_max_year = 0);

}  // namespace convrec
