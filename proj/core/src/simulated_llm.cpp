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

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "convrec/error.hpp"
#include "convrec/llm.hpp"
#include "convrec/prompts.hpp"
#include "convrec/rng.hpp"
#include "text_util.hpp"

namespace convrec {

namespace {

// What the simulated model understood from the conversation so far.
struct Reading {
  std::vector<std::string> liked;
  std::vector<std::string> disliked;
  std::vector<std::string> examples;
  std::vector<std::string> recommended;
  std::size_t count = 10;
  std::optional<int> cutoff;
  bool final_list = false;
  bool less_popular = false;
};

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) lines.emplace_back(text::strip_cr(line));
  return lines;
}

// "- Title" lines following `header` up to the next blank line.
std::vector<std::string> section(const std::vector<std::string>& lines, std::string_view header) {
  std::vector<std::string> out;
  auto it = std::find(lines.begin(), lines.end(), header);
  if (it == lines.end()) return out;
  for (++it; it != lines.end() && !text::trim(*it).empty(); ++it) {
    const auto line = text::trim(*it);
    if (line.rfind("- ", 0) == 0) out.push_back(line.substr(2));
  }
  return out;
}

Reading read_history(std::span<const ChatMessage> history) {
  static const std::regex numbered(R"(^\s*\d+[.)]\s+(.*)$)");
  static const std::regex count_re(R"(\b(\d+) (?:new |different )?movies?\b)");
  static const std::regex cutoff_re(R"(on or before (\d{4}))");

  Reading reading;
  bool first_user = true;
  for (const auto& message : history) {
    const auto lines = lines_of(message.content);
    if (message.role == Role::kAssistant) {
      std::smatch m;
      for (const auto& line : lines) {
        if (std::regex_match(line, m, numbered)) reading.recommended.push_back(text::trim(m[1].str()));
      }
      continue;
    }
    if (message.role != Role::kUser) continue;
    if (first_user) {
      first_user = false;
      for (const auto& entry : section(lines, "My movies:")) {
        constexpr std::string_view kLiked = " [liked]";
        constexpr std::string_view kDisliked = " [disliked]";
        std::string title = entry;
        if (title.ends_with(kLiked)) {
          title.resize(title.size() - kLiked.size());
          reading.liked.push_back(title);
        } else if (title.ends_with(kDisliked)) {
          title.resize(title.size() - kDisliked.size());
          reading.disliked.push_back(title);
        } else {
          continue;
        }
        reading.examples.push_back(title);
      }
    }
    for (const auto& t : section(lines, "Liked:")) {
      if (t != "(none)") reading.liked.push_back(t);
    }
    for (const auto& t : section(lines, "Disliked:")) {
      if (t != "(none)") reading.disliked.push_back(t);
    }
  }

  const std::string& last = history.back().content;
  for (auto it = std::sregex_iterator(last.begin(), last.end(), count_re);
       it != std::sregex_iterator(); ++it) {
    reading.count = std::stoul((*it)[1].str());
  }
  std::smatch m;
  if (std::regex_search(last, m, cutoff_re)) reading.cutoff = std::stoi(m[1].str());
  reading.final_list = last.find("final list") != std::string::npos;
  reading.less_popular = last.find(kLessPopularInstruction) != std::string::npos;
  return reading;
}

// Substitutes one letter of the title part (never the year) with a different
// letter of the same case.
std::string with_typo(const std::string& title, Rng& rng) {
  std::vector<std::size_t> letters;
  const auto paren = title.rfind(" (");
  const std::size_t end = paren == std::string::npos ? title.size() : paren;
  for (std::size_t i = 0; i < end; ++i) {
    if (std::isalpha(static_cast<unsigned char>(title[i]))) letters.push_back(i);
  }
  if (letters.empty()) return title;
  std::string out = title;
  const std::size_t pos = letters[rng.uniform_index(letters.size())];
  const bool upper = std::isupper(static_cast<unsigned char>(out[pos]));
  const int original = std::tolower(static_cast<unsigned char>(out[pos])) - 'a';
  const int shift = 1 + static_cast<int>(rng.uniform_index(25));
  const char replacement = static_cast<char>('a' + (original + shift) % 26);
  out[pos] = upper ? static_cast<char>(std::toupper(replacement)) : replacement;
  return out;
}

}  // namespace

SimulatedRecommender::SimulatedRecommender(const Catalog& catalog,
                                           const EmbeddingStore& embeddings,
                                           std::unordered_map<ItemId, std::size_t> popularity,
                                           SimulatedConfig config)
    : catalog_(catalog), embeddings_(embeddings), config_(config), matcher_(catalog) {
  if (config_.typo_rate < 0.0 || config_.typo_rate > 1.0) {
    throw ConfigError("typo_rate must lie in [0, 1]");
  }
  if (config_.temperature_scale <= 0.0) throw ConfigError("temperature_scale must be positive");
  std::size_t max_count = 0;
  for (const auto& [item, n] : popularity) max_count = std::max(max_count, n);
  popularity_.assign(embeddings_.size(), 0.0);
  if (max_count == 0) return;
  const double denominator = std::log1p(static_cast<double>(max_count));
  for (std::size_t r = 0; r < embeddings_.size(); ++r) {
    const auto it = popularity.find(embeddings_.id(r));
    if (it != popularity.end()) {
      popularity_[r] = std::log1p(static_cast<double>(it->second)) / denominator;
    }
  }
}

std::optional<ItemId> SimulatedRecommender::resolve(std::string_view title) const {
  auto result = matcher_.match(title, 0.75);
  return result.matched_item;
}

double SimulatedRecommender::score(const ItemId& item, std::span<const ItemId> liked,
                                   std::span<const ItemId> disliked, bool less_popular) const {
  const auto row = embeddings_.index_of(item);
  if (!row) throw DataError(fmt::format("item {} has no embedding", item.str()));
  const auto v = embeddings_.row(*row);
  double sum = 0.0;
  for (const auto& l : liked) sum += dot(v, embeddings_.vector(l));
  for (const auto& d : disliked) sum -= dot(v, embeddings_.vector(d));
  const double pop = popularity_[*row];
  return less_popular ? sum - config_.less_popular_penalty * pop
                      : sum + config_.popularity_bias * pop;
}

std::string SimulatedRecommender::complete(const CompletionRequest& request) {
  check_history(request.history);
  if (request.log) request.log->append(request.turn, "request", request.history.back().content);
  const Reading reading = read_history(request.history);

  auto resolve_all = [&](const std::vector<std::string>& titles) {
    std::vector<ItemId> out;
    std::unordered_set<ItemId> seen;
    for (const auto& t : titles) {
      if (auto id = resolve(t); id && embeddings_.contains(*id) && seen.insert(*id).second) {
        out.push_back(*id);
      }
    }
    return out;
  };
  const auto liked = resolve_all(reading.liked);
  const auto disliked = resolve_all(reading.disliked);

  std::unordered_set<ItemId> banned;
  for (const auto& id : resolve_all(reading.examples)) banned.insert(id);
  banned.insert(disliked.begin(), disliked.end());
  if (!reading.final_list) {
    for (const auto& id : resolve_all(reading.recommended)) banned.insert(id);
  }

  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t r = 0; r < embeddings_.size(); ++r) {
    const auto& id = embeddings_.id(r);
    const Item* item = catalog_.find(id);
    if (item == nullptr || banned.contains(id)) continue;
    if (reading.cutoff && item->release_year > *reading.cutoff) continue;
    scored.emplace_back(score(id, liked, disliked, reading.less_popular), r);
  }

  Rng rng(derive_seed({request.seed, static_cast<std::uint64_t>(request.history.size()),
                       stable_hash(request.history.back().content)}));
  if (request.temperature > 0.0) {
    // Gumbel-top-k: equivalent to drawing without replacement from
    // softmax(score / temperature).
    const double divisor = request.temperature * config_.temperature_scale;
    for (auto& [s, r] : scored) s = s / divisor + rng.gumbel();
  }
  const std::size_t count = std::min(reading.count, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(count),
                    scored.end(), [&](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return embeddings_.id(a.second) < embeddings_.id(b.second);
                    });

  std::string out = "Here are my recommendations:\n";
  for (std::size_t i = 0; i < count; ++i) {
    std::string title = catalog_.at(embeddings_.id(scored[i].second)).normalized_title;
    if (config_.typo_rate > 0.0 && rng.uniform01() < config_.typo_rate) {
      title = with_typo(title, rng);
    }
    out += fmt::format("{}. {}\n", i + 1, title);
  }
  if (request.log) request.log->append(request.turn, "response", out);
  return out;
}

}  // namespace convrec
