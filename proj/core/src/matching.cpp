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

#include "convrec/matching.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "convrec/error.hpp"
#include "text_util.hpp"

namespace convrec {

std::size_t levenshtein(std::u32string_view x, std::u32string_view y) {
  if (x.size() < y.size()) std::swap(x, y);
  std::vector<std::size_t> row(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitution = diagonal + (x[i - 1] == y[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitution});
      diagonal = above;
    }
  }
  return row[y.size()];
}

std::size_t levenshtein(std::string_view x, std::string_view y) {
  return levenshtein(text::utf8_decode(x), text::utf8_decode(y));
}

namespace {

double nls_from(std::size_t distance, std::size_t len_x, std::size_t len_y) {
  const std::size_t denominator = len_x + len_y + distance;
  if (denominator == 0) return 1.0;
  return 1.0 - 2.0 * static_cast<double>(distance) / static_cast<double>(denominator);
}

}  // namespace

double nls(std::string_view x, std::string_view y) {
  const auto ux = text::utf8_decode(x);
  const auto uy = text::utf8_decode(y);
  return nls_from(levenshtein(ux, uy), ux.size(), uy.size());
}

std::string canonicalize_title(std::string_view title) {
  std::string out;
  out.reserve(title.size());
  bool pending_space = false;
  for (const char c : title) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (uc < 0x80 && std::ispunct(uc) && c != '(' && c != ')') continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(uc < 0x80 ? std::tolower(uc) : uc));
  }
  return out;
}

std::string_view to_string(MatchMethod method) {
  switch (method) {
    case MatchMethod::kExact:
      return "exact";
    case MatchMethod::kFuzzy:
      return "fuzzy";
    case MatchMethod::kUnmatched:
      return "unmatched";
  }
  return "unknown";
}

void UnmatchedLedger::record(std::string_view raw_title) {
  std::lock_guard lock(mutex_);
  ++counts_[text::trim(raw_title)];
}

std::map<std::string, std::size_t> UnmatchedLedger::counts() const {
  std::lock_guard lock(mutex_);
  return counts_;
}

std::size_t UnmatchedLedger::total() const {
  std::lock_guard lock(mutex_);
  std::size_t sum = 0;
  for (const auto& [title, count] : counts_) sum += count;
  return sum;
}

void UnmatchedLedger::write_review_csv(const std::filesystem::path& path,
                                       std::size_t min_count) const {
  std::vector<std::pair<std::string, std::size_t>> rows;
  for (const auto& [title, count] : counts()) {
    if (count >= min_count) rows.emplace_back(title, count);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  out << "raw_title,count\n";
  for (const auto& [title, count] : rows) {
    std::string quoted = "\"";
    for (const char c : title) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    out << quoted << ',' << count << '\n';
  }
}

TitleMatcher::TitleMatcher(const std::map<std::string, ItemId>& titles) {
  for (const auto& [title, item] : titles) add(title, item);
  finish();
}

TitleMatcher::TitleMatcher(const Catalog& catalog) {
  for (const auto& item : catalog.items()) add(item.normalized_title, item.id);
  finish();
}

void TitleMatcher::add(std::string_view title, const ItemId& item) {
  auto canonical = canonicalize_title(title);
  const auto [it, inserted] = exact_.try_emplace(canonical, item);
  if (!inserted && item < it->second) it->second = item;
  entries_.push_back({text::utf8_decode(canonical), item});
}

void TitleMatcher::finish() {
  if (entries_.empty()) throw DataError("title matcher needs a nonempty catalog");
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    if (a.canonical.size() != b.canonical.size()) return a.canonical.size() < b.canonical.size();
    return a.item < b.item;
  });
}

MatchResult TitleMatcher::match(std::string_view raw, double threshold,
                                UnmatchedLedger* ledger) const {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError(fmt::format("title_threshold {} is not in (0, 1]", threshold));
  }
  MatchResult result;
  result.raw_title = text::trim(raw);
  const std::string canonical = canonicalize_title(raw);
  if (const auto it = exact_.find(canonical); it != exact_.end()) {
    result.matched_item = it->second;
    result.similarity = 1.0;
    result.method = MatchMethod::kExact;
    return result;
  }

  const auto query = text::utf8_decode(canonical);
  // NLS >= t forces LD >= |a-b| to satisfy |a-b|(1+t) <= (1-t)(a+b), i.e.
  // the candidate length b lies in [t·a, a/t]. Nothing outside can match.
  const auto a = static_cast<double>(query.size());
  const auto min_len = static_cast<std::size_t>(std::ceil(threshold * a - 1e-9));
  const auto max_len = static_cast<std::size_t>(std::floor(a / threshold + 1e-9));
  const auto first = std::lower_bound(
      entries_.begin(), entries_.end(), min_len,
      [](const Entry& e, std::size_t len) { return e.canonical.size() < len; });

  double best = -1.0;
  const Entry* best_entry = nullptr;
  for (auto it = first; it != entries_.end() && it->canonical.size() <= max_len; ++it) {
    const double sim =
        nls_from(levenshtein(query, it->canonical), query.size(), it->canonical.size());
    if (sim > best || (sim == best && best_entry && it->item < best_entry->item)) {
      best = sim;
      best_entry = &*it;
    }
  }
  if (best_entry && best >= threshold) {
    result.matched_item = best_entry->item;
    result.similarity = best;
    result.method = MatchMethod::kFuzzy;
    return result;
  }
  result.similarity = std::max(best, 0.0);
  if (ledger) ledger->record(raw);
  return result;
}

MatchResult match_title(std::string_view raw, const TitleMatcher& catalog_index,
                        double title_threshold, UnmatchedLedger* ledger) {
  return catalog_index.match(raw, title_threshold, ledger);
}

}  // namespace convrec
