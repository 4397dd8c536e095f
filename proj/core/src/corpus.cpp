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

#include "convrec/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "convrec/error.hpp"
#include "convrec/rng.hpp"
#include "json.hpp"
#include "text_util.hpp"

namespace convrec {
namespace {

using json = nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  return in;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.emplace_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::optional<std::size_t> column_of(const std::vector<std::string>& header,
                                     std::initializer_list<std::string_view> names) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    for (const auto name : names) {
      if (text::iequals(header[i], name)) return i;
    }
  }
  return std::nullopt;
}

double parse_double(const std::string& field, std::size_t line) {
  try {
    std::size_t used = 0;
    const double value = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return value;
  } catch (const std::exception&) {
    throw ParseError(fmt::format("not a number: '{}'", field), line);
  }
}

int parse_int(const std::string& field, std::size_t line) {
  try {
    std::size_t used = 0;
    const int value = std::stoi(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return value;
  } catch (const std::exception&) {
    throw ParseError(fmt::format("not an integer: '{}'", field), line);
  }
}

std::vector<std::string> split_multi(std::string_view field) {
  std::vector<std::string> values;
  std::size_t start = 0;
  while (start <= field.size()) {
    const std::size_t bar = field.find('|', start);
    const std::string value = text::trim(field.substr(start, bar - start));
    if (!value.empty()) values.push_back(value);
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return values;
}

std::string capitalize(std::string value) {
  if (!value.empty()) {
    value[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(value[0])));
  }
  return value;
}

// Positive seats for a set of `size` under largest-remainder allocation of
// the profile's positive:negative ratio. Ties in the remainder go positive.
std::size_t proportional_positives(std::size_t size, std::size_t positives,
                                   std::size_t total) {
  const std::size_t negatives = total - positives;
  const std::size_t pos_floor = size * positives / total;
  const std::size_t neg_floor = size * negatives / total;
  if (pos_floor + neg_floor == size) return pos_floor;
  const std::size_t pos_rem = size * positives % total;
  const std::size_t neg_rem = size * negatives % total;
  return pos_rem >= neg_rem ? pos_floor + 1 : pos_floor;
}

// Scaled deviation (times total) of a set's positive count from its quota.
long long scaled_deviation(std::size_t set_pos, std::size_t set_size, std::size_t positives,
                           std::size_t total) {
  return static_cast<long long>(set_pos * total) -
         static_cast<long long>(set_size * positives);
}

void ensure_both_polarities(std::size_t& set_pos, std::size_t set_size,
                            std::size_t positives, std::size_t negatives) {
  if (set_size < 2) return;
  if (set_pos == 0 && positives >= 3) set_pos = 1;
  if (set_pos == set_size && negatives >= 3) set_pos = set_size - 1;
}

}  // namespace

Catalog::Catalog(std::vector<Item> items) : items_(std::move(items)) {
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const Item& item = items_[i];
    if (item.normalized_title.empty()) {
      throw DataError(fmt::format("item {} has an empty title", item.id.str()));
    }
    if (item.release_year <= 1800) {
      throw DataError(fmt::format("item {} has implausible year {}", item.id.str(),
                                  item.release_year));
    }
    if (!index_.emplace(item.id, i).second) {
      throw DataError(fmt::format("duplicate item id {}", item.id.str()));
    }
    max_year_ = std::max(max_year_, item.release_year);
  }
}

const Item* Catalog::find(const ItemId& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

const Item& Catalog::at(const ItemId& id) const {
  if (const Item* item = find(id)) return *item;
  throw DataError(fmt::format("unknown item id {}", id.str()));
}

ContentLevel content_level_from_int(int level) {
  if (level < 1 || level > 4) {
    throw ConfigError(fmt::format("content level must be 1..4, got {}", level));
  }
  return static_cast<ContentLevel>(level);
}

SplitSize SplitSize::count(std::size_t n) { return SplitSize(static_cast<double>(n), false); }

SplitSize SplitSize::fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw ConfigError(fmt::format("fraction {} not in (0,1)", f));
  return SplitSize(f, true);
}

SplitSize SplitSize::from_number(double value) {
  if (value < 0.0 || !std::isfinite(value)) {
    throw ConfigError(fmt::format("split size {} must be non-negative", value));
  }
  if (value < 1.0) return fraction(value);
  if (value != std::floor(value)) {
    throw ConfigError(fmt::format("split count {} must be an integer", value));
  }
  return count(static_cast<std::size_t>(value));
}

std::size_t SplitSize::resolve(std::size_t total) const {
  if (!is_fraction_) return static_cast<std::size_t>(value_);
  return static_cast<std::size_t>(std::llround(value_ * static_cast<double>(total)));
}

std::vector<Interaction> load_ratings(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_tabs(text::strip_cr(line));
  const auto user_col = column_of(header, {"userID", "user_id"});
  const auto item_col = column_of(header, {"itemID", "item_id", "movieID"});
  const auto rating_col = column_of(header, {"rating"});
  if (!user_col || !item_col || !rating_col) {
    throw ParseError("ratings header must name userID, itemID and rating", 1);
  }
  const std::size_t needed = std::max({*user_col, *item_col, *rating_col}) + 1;

  std::vector<Interaction> interactions;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = text::strip_cr(line);
    if (text::trim(row).empty()) continue;
    const auto fields = split_tabs(row);
    if (fields.size() < needed) {
      throw ParseError(fmt::format("expected at least {} fields, got {}", needed, fields.size()),
                       line_no);
    }
    const std::string& user = fields[*user_col];
    const std::string& item = fields[*item_col];
    if (user.empty() || item.empty()) throw ParseError("empty user or item id", line_no);
    const double rating = parse_double(fields[*rating_col], line_no);
    if (rating < kMinRating || rating > kMaxRating) {
      throw ParseError(fmt::format("rating {} outside [{}, {}]", rating, kMinRating, kMaxRating),
                       line_no);
    }
    if (!seen.emplace(user, item).second) {
      throw ParseError(fmt::format("duplicate rating for user {} item {}", user, item), line_no);
    }
    interactions.push_back({UserId(user), ItemId(item), rating});
  }
  return interactions;
}

Catalog load_items(const std::filesystem::path& path,
                   const std::optional<std::filesystem::path>& supplement_path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("items file has no header", 1);
  const auto header = split_tabs(text::strip_cr(line));
  if (header.size() < 4 || !text::iequals(header[0], "id") ||
      !text::iequals(header[1], "title") || !text::iequals(header[2], "year") ||
      !text::iequals(header[3], "genres")) {
    throw ParseError("items header must start with id, title, year, genres", 1);
  }

  std::vector<Item> items;
  std::unordered_map<std::string, std::size_t> by_id;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = text::strip_cr(line);
    if (text::trim(row).empty()) continue;
    const auto fields = split_tabs(row);
    if (fields.size() < 4) throw ParseError("expected at least 4 fields", line_no);
    Item item;
    item.id = ItemId(fields[0]);
    item.raw_title = text::trim(fields[1]);
    if (item.raw_title.empty()) throw ParseError("empty title", line_no);
    item.release_year = parse_int(fields[2], line_no);
    if (item.release_year <= 1800) {
      throw ParseError(fmt::format("implausible year {}", item.release_year), line_no);
    }
    item.genres = split_multi(fields[3]);
    for (std::size_t c = 4; c < fields.size() && c < header.size(); ++c) {
      const auto values = split_multi(fields[c]);
      if (values.empty()) continue;
      std::string joined;
      for (std::size_t v = 0; v < values.size(); ++v) {
        if (v) joined += ", ";
        joined += values[v];
      }
      item.extra_metadata.emplace(header[c], std::move(joined));
    }
    item.normalized_title = normalize_title(item.raw_title, item.release_year);
    if (!by_id.emplace(item.id.str(), items.size()).second) {
      throw DataError(fmt::format("duplicate item id {} (line {})", item.id.str(), line_no));
    }
    items.push_back(std::move(item));
  }

  if (supplement_path) {
    auto sup = open_input(*supplement_path);
    std::size_t sup_line = 0;
    while (std::getline(sup, line)) {
      ++sup_line;
      if (text::trim(line).empty()) continue;
      json record;
      try {
        record = json::parse(line);
      } catch (const json::exception& e) {
        throw ParseError(fmt::format("bad supplement record: {}", e.what()), sup_line);
      }
      if (!record.contains("item_id") || !record.contains("text")) {
        throw ParseError("supplement record needs item_id and text", sup_line);
      }
      const auto id = record["item_id"].is_string() ? record["item_id"].get<std::string>()
                                                    : record["item_id"].dump();
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        spdlog::warn("supplement line {} references unknown item {}; skipped", sup_line, id);
        continue;
      }
      items[it->second].supplement_text = record["text"].get<std::string>();
    }
  }
  return Catalog(std::move(items));
}

std::string normalize_title(std::string_view raw_title, int year) {
  std::string title = text::trim(raw_title);
  // Drop an existing trailing "(yyyy)".
  if (title.size() >= 6 && title.back() == ')') {
    const std::size_t open = title.size() - 6;
    if (title[open] == '(' &&
        std::all_of(title.begin() + static_cast<long>(open) + 1, title.end() - 1,
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      title = text::trim(std::string_view(title).substr(0, open));
    }
  }
  const std::size_t comma = title.rfind(", ");
  if (comma != std::string::npos) {
    const std::string_view suffix = std::string_view(title).substr(comma + 2);
    if (text::iequals(suffix, "the") || text::iequals(suffix, "a") ||
        text::iequals(suffix, "an")) {
      title = std::string(suffix) + " " + title.substr(0, comma);
    }
  }
  return fmt::format("{} ({})", title, year);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

TokenStats compute_token_stats(std::span<const std::string> documents, double top_fraction) {
  TokenStats stats;
  for (const auto& doc : documents) {
    for (auto& token : tokenize(doc)) ++stats.frequency[token];
  }
  if (stats.frequency.empty()) throw DataError("cannot compute token statistics of an empty corpus");

  std::vector<std::size_t> counts;
  counts.reserve(stats.frequency.size());
  for (const auto& [token, count] : stats.frequency) counts.push_back(count);
  std::sort(counts.begin(), counts.end(), std::greater<>());
  const auto distinct = static_cast<double>(counts.size());
  // Integer ceil of top_fraction * distinct, guarding against 0.05*100 = 5.000...1.
  auto top = static_cast<std::size_t>(std::ceil(top_fraction * distinct - 1e-9));
  top = std::clamp<std::size_t>(top, 1, counts.size());
  stats.cutoff_frequency = counts[top - 1];
  for (const auto& [token, count] : stats.frequency) {
    if (count >= stats.cutoff_frequency) stats.pruned.insert(token);
  }
  return stats;
}

std::string build_content_document(const Item& item, ContentLevel level, const TokenStats* stats) {
  if (level == ContentLevel::kPruned && stats == nullptr) {
    throw ConfigError("content level 4 requires corpus token statistics");
  }
  std::string doc = fmt::format("Title: {}\nYear: {}\n", item.normalized_title, item.release_year);
  doc += "Genres: ";
  for (std::size_t i = 0; i < item.genres.size(); ++i) {
    if (i) doc += ", ";
    doc += item.genres[i];
  }
  doc += '\n';
  if (level >= ContentLevel::kMetadata) {
    for (const auto& [name, value] : item.extra_metadata) {
      doc += fmt::format("{}: {}\n", capitalize(name), value);
    }
  }
  if (level >= ContentLevel::kSupplemented && item.supplement_text &&
      !item.supplement_text->empty()) {
    doc += fmt::format("Summary: {}\n", *item.supplement_text);
  }
  if (level != ContentLevel::kPruned) return doc;

  const auto& stop = stop_words();
  std::string pruned;
  for (const auto& token : tokenize(doc)) {
    if (stop.contains(token) || stats->is_pruned(token)) continue;
    if (!pruned.empty()) pruned += ' ';
    pruned += token;
  }
  return pruned;
}

std::map<UserId, std::vector<Interaction>> group_by_user(
    std::span<const Interaction> interactions) {
  std::map<UserId, std::vector<Interaction>> grouped;
  for (const auto& interaction : interactions) grouped[interaction.user].push_back(interaction);
  return grouped;
}

std::vector<UserId> sample_users(std::span<const Interaction> interactions,
                                 const UserSampling& sampling) {
  if (!(sampling.lo_percentile >= 0.0 && sampling.lo_percentile < sampling.hi_percentile &&
        sampling.hi_percentile <= 100.0)) {
    throw ConfigError(fmt::format("percentile band [{}, {}] is invalid", sampling.lo_percentile,
                                  sampling.hi_percentile));
  }
  struct Profile {
    std::size_t total = 0;
    std::size_t dislikes = 0;
  };
  std::map<UserId, Profile> profiles;
  for (const auto& interaction : interactions) {
    auto& profile = profiles[interaction.user];
    ++profile.total;
    if (!interaction.positive()) ++profile.dislikes;
  }
  if (profiles.empty()) throw DataError("no interactions to sample users from");

  std::vector<std::size_t> totals;
  totals.reserve(profiles.size());
  for (const auto& [user, profile] : profiles) totals.push_back(profile.total);
  std::sort(totals.begin(), totals.end());
  // Nearest-rank percentile of the per-user interaction counts.
  const auto percentile_value = [&](double pct) {
    const auto rank = static_cast<std::size_t>(
        std::ceil(pct / 100.0 * static_cast<double>(totals.size()) - 1e-9));
    return totals[std::clamp<std::size_t>(rank, 1, totals.size()) - 1];
  };
  const std::size_t lo = percentile_value(sampling.lo_percentile);
  const std::size_t hi = percentile_value(sampling.hi_percentile);

  std::vector<UserId> eligible;
  for (const auto& [user, profile] : profiles) {
    if (profile.total >= lo && profile.total <= hi && profile.total >= sampling.min_total &&
        profile.dislikes >= sampling.min_dislikes) {
      eligible.push_back(user);
    }
  }
  if (eligible.size() < sampling.count) {
    throw DataError(fmt::format(
        "only {} users satisfy the sampling constraints ({} requested, short by {})",
        eligible.size(), sampling.count, sampling.count - eligible.size()));
  }
  Rng rng(sampling.seed);
  rng.shuffle(std::span(eligible));
  eligible.resize(sampling.count);
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

UserSplit split_user(std::span<const Interaction> interactions, SplitSize example_size,
                     SplitSize eval_size, std::uint64_t seed) {
  if (interactions.empty()) throw DataError("cannot split an empty profile");
  UserSplit split;
  split.user = interactions.front().user;

  std::vector<Interaction> positives;
  std::vector<Interaction> negatives;
  for (const auto& interaction : interactions) {
    if (interaction.user != split.user) {
      throw DataError("split_user received interactions from more than one user");
    }
    (interaction.positive() ? positives : negatives).push_back(interaction);
  }
  const auto by_item = [](const Interaction& a, const Interaction& b) { return a.item < b.item; };
  std::sort(positives.begin(), positives.end(), by_item);
  std::sort(negatives.begin(), negatives.end(), by_item);

  const std::size_t total = interactions.size();
  const std::size_t pos = positives.size();
  const std::size_t neg = negatives.size();
  if (pos < 2 || neg < 2) {
    throw DataError(fmt::format("user {} needs at least 2 positive and 2 negative interactions "
                                "(has {} / {})",
                                split.user.str(), pos, neg));
  }
  const std::size_t e_size = example_size.resolve(total);
  const std::size_t t_size = eval_size.resolve(total);
  if (e_size == 0 || t_size == 0 || e_size + t_size >= total) {
    throw DataError(fmt::format("example size {} and evaluation size {} do not fit a profile of {} "
                                "with a nonempty feedback set",
                                e_size, t_size, total));
  }
  const std::size_t f_size = total - e_size - t_size;

  std::size_t e_pos = proportional_positives(e_size, pos, total);
  std::size_t t_pos = proportional_positives(t_size, pos, total);
  // Keep the feedback remainder within one item of its own quota.
  const long long f_dev = -(scaled_deviation(e_pos, e_size, pos, total) +
                            scaled_deviation(t_pos, t_size, pos, total));
  const auto scaled_total = static_cast<long long>(total);
  if (f_dev >= scaled_total && t_pos < t_size) {
    ++t_pos;
  } else if (f_dev <= -scaled_total && t_pos > 0) {
    --t_pos;
  }
  ensure_both_polarities(e_pos, e_size, pos, neg);
  ensure_both_polarities(t_pos, t_size, pos, neg);
  if (e_pos + t_pos > pos || (e_size - e_pos) + (t_size - t_pos) > neg) {
    throw DataError(fmt::format("profile of user {} cannot fill the stratified split",
                                split.user.str()));
  }
  std::size_t f_pos = pos - e_pos - t_pos;
  if (f_size >= 2 && (f_pos == 0 || f_pos == f_size)) {
    // Borrow from the larger of the other sets so feedback sees both polarities.
    const bool need_pos = f_pos == 0;
    std::size_t& donor = need_pos ? (e_pos > t_pos ? e_pos : t_pos)
                                  : ((e_size - e_pos) > (t_size - t_pos) ? e_pos : t_pos);
    const std::size_t donor_size = &donor == &e_pos ? e_size : t_size;
    if (need_pos && donor > 1) {
      --donor;
      ++f_pos;
    } else if (!need_pos && donor_size - donor > 1) {
      ++donor;
      --f_pos;
    }
  }

  Rng rng(seed);
  rng.shuffle(std::span(positives));
  rng.shuffle(std::span(negatives));
  const auto take = [](std::vector<Interaction>& out, const std::vector<Interaction>& from,
                       std::size_t begin, std::size_t count) {
    out.insert(out.end(), from.begin() + static_cast<long>(begin),
               from.begin() + static_cast<long>(begin + count));
  };
  take(split.example_set, positives, 0, e_pos);
  take(split.example_set, negatives, 0, e_size - e_pos);
  take(split.evaluation_set, positives, e_pos, t_pos);
  take(split.evaluation_set, negatives, e_size - e_pos, t_size - t_pos);
  take(split.feedback_set, positives, e_pos + t_pos, pos - e_pos - t_pos);
  take(split.feedback_set, negatives, (e_size - e_pos) + (t_size - t_pos),
       neg - (e_size - e_pos) - (t_size - t_pos));
  rng.shuffle(std::span(split.example_set));
  rng.shuffle(std::span(split.feedback_set));
  rng.shuffle(std::span(split.evaluation_set));
  return split;
}

namespace {

json interactions_to_json(const std::vector<Interaction>& set) {
  json out = json::array();
  for (const auto& i : set) out.push_back(json::array({i.item.str(), i.rating}));
  return out;
}

std::vector<Interaction> interactions_from_json(const json& data, const UserId& user) {
  std::vector<Interaction> out;
  for (const auto& entry : data) {
    out.push_back({user, ItemId(entry.at(0).get<std::string>()), entry.at(1).get<double>()});
  }
  return out;
}

}  // namespace

void save_splits(const std::filesystem::path& path, std::span<const UserSplit> splits) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  for (const auto& split : splits) {
    json record = {{"user", split.user.str()},
                   {"example", interactions_to_json(split.example_set)},
                   {"feedback", interactions_to_json(split.feedback_set)},
                   {"evaluation", interactions_to_json(split.evaluation_set)}};
    out << record.dump() << '\n';
  }
}

std::vector<UserSplit> load_splits(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<UserSplit> splits;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto record = json::parse(line);
      UserSplit split;
      split.user = UserId(record.at("user").get<std::string>());
      split.example_set = interactions_from_json(record.at("example"), split.user);
      split.feedback_set = interactions_from_json(record.at("feedback"), split.user);
      split.evaluation_set = interactions_from_json(record.at("evaluation"), split.user);
      splits.push_back(std::move(split));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("bad split record: {}", e.what()), line_no);
    }
  }
  return splits;
}

void save_catalog(const std::filesystem::path& path, const Catalog& catalog) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  for (const auto& item : catalog.items()) {
    json record = {{"id", item.id.str()},
                   {"raw_title", item.raw_title},
                   {"title", item.normalized_title},
                   {"year", item.release_year},
                   {"genres", item.genres},
                   {"metadata", item.extra_metadata}};
    if (item.supplement_text) record["supplement"] = *item.supplement_text;
    out << record.dump() << '\n';
  }
}

Catalog load_catalog(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Item> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto record = json::parse(line);
      Item item;
      item.id = ItemId(record.at("id").get<std::string>());
      item.raw_title = record.at("raw_title").get<std::string>();
      item.normalized_title = record.at("title").get<std::string>();
      item.release_year = record.at("year").get<int>();
      item.genres = record.at("genres").get<std::vector<std::string>>();
      item.extra_metadata = record.at("metadata").get<std::map<std::string, std::string>>();
      if (record.contains("supplement")) {
        item.supplement_text = record["supplement"].get<std::string>();
      }
      items.push_back(std::move(item));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("bad catalog record: {}", e.what()), line_no);
    }
  }
  return Catalog(std::move(items));
}

}  // namespace convrec
