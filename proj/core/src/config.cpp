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

#include "convrec/config.hpp"

#include <fmt/format.h>

#include "convrec/error.hpp"
#include "text_util.hpp"

namespace convrec {

std::string_view to_string(PromptStyle style) {
  switch (style) {
    case PromptStyle::kZero:
      return "zero";
    case PromptStyle::kFew:
      return "few";
    case PromptStyle::kCot:
      return "cot";
  }
  return "unknown";
}

PromptStyle prompt_style_from_string(std::string_view name) {
  const auto lower = text::to_lower(text::trim(name));
  if (lower == "zero") return PromptStyle::kZero;
  if (lower == "few" || lower == "one") return PromptStyle::kFew;
  if (lower == "cot") return PromptStyle::kCot;
  throw ConfigError(fmt::format("unknown prompt_style '{}'", name));
}

void validate(const SessionConfig& config, int catalog_max_year) {
  if (config.p < 1) throw ConfigError(fmt::format("p must be >= 1, got {}", config.p));
  if (config.k < 1) throw ConfigError(fmt::format("k must be >= 1, got {}", config.k));
  if (config.k_f < 1) throw ConfigError(fmt::format("k_f must be >= 1, got {}", config.k_f));
  if (config.temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (!(config.title_threshold > 0.0 && config.title_threshold <= 1.0)) {
    throw ConfigError("title_threshold must be in (0, 1]");
  }
  if (!(config.q > 0.0 && config.q < 1.0)) throw ConfigError("q must be in (0, 1)");
  if (catalog_max_year > 0 && config.release_cutoff > catalog_max_year) {
    throw ConfigError(fmt::format("release_cutoff {} is after the newest catalog year {}",
                                  config.release_cutoff, catalog_max_year));
  }
}

}  // namespace convrec
