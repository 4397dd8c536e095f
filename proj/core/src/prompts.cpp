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

#include "convrec/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "convrec/error.hpp"
#include "convrec/rng.hpp"

namespace convrec {

namespace detail {
const std::map<std::string, std::string>& builtin_template_sources();
}

namespace {

using Values = std::map<std::string, std::string, std::less<>>;

std::string strip_trailing_newline(std::string text) {
  if (!text.empty() && text.back() == '\n') text.pop_back();
  if (!text.empty() && text.back() == '\r') text.pop_back();
  return text;
}

const char* movie_noun(int count) { return count == 1 ? "movie" : "movies"; }

std::string less_popular(const PromptOptions& options, const PromptTemplates& templates) {
  if (options.prompt_popular) return {};
  return "\n" + templates.get("less_popular");
}

Values request_values(int count, const PromptOptions& options,
                      const PromptTemplates& templates) {
  if (count < 1) throw ConfigError(fmt::format("requested count {} is below 1", count));
  return {{"count", std::to_string(count)},
          {"movie_noun", movie_noun(count)},
          {"release_cutoff", std::to_string(options.release_cutoff)},
          {"less_popular", less_popular(options, templates)}};
}

std::string title_lines(std::span<const std::string> titles) {
  if (titles.empty()) return "(none)";
  std::string out;
  for (const auto& title : titles) {
    if (!out.empty()) out += '\n';
    out += "- " + title;
  }
  return out;
}

std::string numbered(std::span<const std::string> titles) {
  std::string out;
  for (std::size_t i = 0; i < titles.size(); ++i) {
    if (i > 0) out += '\n';
    out += fmt::format("{}. {}", i + 1, titles[i]);
  }
  return out;
}

std::string joined_lines(std::span<const std::string> lines) {
  std::string out;
  for (const auto& line : lines) {
    if (!out.empty()) out += '\n';
    out += line;
  }
  return out;
}

}  // namespace

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates templates = [] {
    PromptTemplates t;
    for (const auto& [name, text] : detail::builtin_template_sources()) {
      t.sources_.emplace(name, strip_trailing_newline(text));
    }
    return t;
  }();
  return templates;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError(fmt::format("template directory {} does not exist", dir.string()));
  }
  PromptTemplates t = builtin();
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot read {}", entry.path().string()));
    std::ostringstream text;
    text << in.rdbuf();
    t.sources_[entry.path().stem().string()] = strip_trailing_newline(text.str());
  }
  return t;
}

const std::string& PromptTemplates::get(std::string_view name) const {
  const auto it = sources_.find(name);
  if (it == sources_.end()) throw ConfigError(fmt::format("unknown prompt template '{}'", name));
  return it->second;
}

std::string render_template(std::string_view tpl, const Values& values) {
  std::string out;
  out.reserve(tpl.size() * 2);
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    const char c = tpl[i];
    if (c == '{') {
      if (i + 1 < tpl.size() && tpl[i + 1] == '{') {
        out += '{';
        ++i;
        continue;
      }
      const auto close = tpl.find('}', i + 1);
      if (close == std::string_view::npos) {
        throw ConfigError(fmt::format("unterminated placeholder at offset {}", i));
      }
      const auto name = tpl.substr(i + 1, close - i - 1);
      const auto it = values.find(name);
      if (it == values.end()) {
        throw ConfigError(fmt::format("no value for placeholder {{{}}}", name));
      }
      out += it->second;
      i = close;
    } else if (c == '}') {
      if (i + 1 < tpl.size() && tpl[i + 1] == '}') ++i;
      out += '}';
    } else {
      out += c;
    }
  }
  return out;
}

PromptOptions prompt_options(const SessionConfig& config) {
  return {config.release_cutoff, config.prompt_popular};
}

std::string render_movie_lines(std::span<const ExampleMovie> movies) {
  std::string out;
  for (const auto& movie : movies) {
    if (!out.empty()) out += '\n';
    out += fmt::format("- {} [{}]", movie.title, movie.liked ? "liked" : "disliked");
  }
  return out;
}

std::string build_initial_prompt(const SessionConfig& config, std::span<const ExampleMovie> examples,
                                 const SyntheticExample* synthetic,
                                 const PromptTemplates& templates) {
  if (examples.empty()) throw ConfigError("initial prompt needs at least one example item");
  auto values = request_values(config.requested_at(1), prompt_options(config), templates);
  values["user_movies"] = render_movie_lines(examples);
  switch (config.prompt_style) {
    case PromptStyle::kZero:
      return render_template(templates.get("initial_zero"), values);
    case PromptStyle::kFew:
    case PromptStyle::kCot:
      break;
  }
  if (synthetic == nullptr) {
    throw ConfigError(fmt::format("the {} prompt style needs a synthetic example",
                                  to_string(config.prompt_style)));
  }
  values["demo_movies"] = render_movie_lines(synthetic->movies);
  values["demo_answer"] = numbered(synthetic->recommendations);
  if (config.prompt_style == PromptStyle::kFew) {
    return render_template(templates.get("initial_few"), values);
  }
  if (synthetic->reasoning.empty()) throw ConfigError("the cot prompt style needs reasoning lines");
  values["demo_reasoning"] = joined_lines(synthetic->reasoning);
  return render_template(templates.get("initial_cot"), values);
}

SyntheticExample build_synthetic_example(const Catalog& catalog, const EmbeddingStore& embeddings,
                                         std::size_t example_count, std::size_t k,
                                         std::uint64_t seed, PromptStyle style,
                                         const std::unordered_set<ItemId>& exclude) {
  if (style == PromptStyle::kZero) {
    throw ConfigError("synthetic examples are only used by the few and cot styles");
  }
  if (example_count < 2 || k < 1) {
    throw ConfigError("synthetic example needs at least two movies and one recommendation");
  }
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < embeddings.size(); ++r) {
    const auto& id = embeddings.id(r);
    if (catalog.find(id) != nullptr && !exclude.contains(id)) rows.push_back(r);
  }
  if (rows.size() < example_count + k) {
    throw DataError(fmt::format("synthetic example needs {} catalog items, only {} available",
                                example_count + k, rows.size()));
  }

  Rng rng(seed);
  const auto anchor = embeddings.row(rows[rng.uniform_index(rows.size())]);
  std::vector<std::pair<double, std::size_t>> by_anchor;
  by_anchor.reserve(rows.size());
  for (const auto r : rows) by_anchor.emplace_back(dot(anchor, embeddings.row(r)), r);
  std::sort(by_anchor.begin(), by_anchor.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return embeddings.id(a.second) < embeddings.id(b.second);
  });

  const std::size_t liked_count = (example_count + 1) / 2;
  const std::size_t disliked_count = example_count - liked_count;
  std::vector<ItemId> liked;
  for (std::size_t i = 0; i < liked_count; ++i) liked.push_back(embeddings.id(by_anchor[i].second));
  // Dislikes come from the half of the catalog least similar to the anchor.
  std::vector<std::size_t> far;
  const std::size_t far_begin = std::max(liked_count, by_anchor.size() / 2);
  for (std::size_t i = far_begin; i < by_anchor.size(); ++i) far.push_back(by_anchor[i].second);
  rng.shuffle(std::span(far));
  std::vector<ItemId> disliked;
  for (std::size_t i = 0; i < disliked_count; ++i) disliked.push_back(embeddings.id(far[i]));

  std::unordered_set<ItemId> skip = exclude;
  skip.insert(liked.begin(), liked.end());
  skip.insert(disliked.begin(), disliked.end());
  auto demos = nearest_items(embeddings, mean_vector(embeddings, liked), k, skip);

  SyntheticExample example;
  for (const auto& id : liked) example.movies.push_back({catalog.at(id).normalized_title, true});
  for (const auto& id : disliked) {
    example.movies.push_back({catalog.at(id).normalized_title, false});
  }
  rng.shuffle(std::span(example.movies));

  if (style == PromptStyle::kCot) {
    std::vector<std::pair<double, ItemId>> scored;
    for (const auto& id : demos) {
      const auto v = embeddings.vector(id);
      double score = 0.0;
      for (const auto& l : liked) score += dot(v, embeddings.vector(l));
      for (const auto& d : disliked) score -= dot(v, embeddings.vector(d));
      scored.emplace_back(score, id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    demos.clear();
    for (const auto& [score, id] : scored) demos.push_back(id);

    std::size_t step = 1;
    for (const auto& movie : example.movies) {
      example.reasoning.push_back(
          movie.liked
              ? fmt::format("step {}: I liked {}, so movies similar to it are good candidates.",
                            step++, movie.title)
              : fmt::format("step {}: I disliked {}, so movies similar to it are poor candidates.",
                            step++, movie.title));
    }
    example.reasoning.push_back(fmt::format(
        "step {}: Rank the candidates by their total similarity to the liked movies minus their "
        "total similarity to the disliked movies.",
        step));
  }
  for (const auto& id : demos) example.recommendations.push_back(catalog.at(id).normalized_title);
  return example;
}

std::string build_feedback(std::span<const std::string> good, std::span<const std::string> bad,
                           const PromptTemplates& templates) {
  if (good.empty() && bad.empty()) return templates.get("feedback_empty");
  return render_template(templates.get("feedback"),
                         {{"liked", title_lines(good)}, {"disliked", title_lines(bad)}});
}

std::string build_reprompt(std::span<const std::string> good, std::span<const std::string> bad,
                           int k, const PromptOptions& options,
                           const PromptTemplates& templates) {
  const auto values = request_values(k, options, templates);
  const bool empty = good.empty() && bad.empty();
  return build_feedback(good, bad, templates) + "\n\n" +
         render_template(templates.get(empty ? "request_different" : "request_more"), values);
}

std::string build_final_prompt(int k_f, const PromptOptions& options,
                               const PromptTemplates& templates) {
  return render_template(templates.get("final"), request_values(k_f, options, templates));
}

std::string build_final_prompt(std::span<const std::string> good, std::span<const std::string> bad,
                               int k_f, const PromptOptions& options,
                               const PromptTemplates& templates) {
  return build_feedback(good, bad, templates) + "\n\n" +
         build_final_prompt(k_f, options, templates);
}

}  // namespace convrec
