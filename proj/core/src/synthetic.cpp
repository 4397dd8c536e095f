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

#include "convrec/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "convrec/error.hpp"
#include "convrec/rng.hpp"
#include "json.hpp"

namespace convrec {

namespace {

constexpr std::array<std::string_view, 60> kAdjectives = {
    "Silent",   "Broken",  "Golden",   "Hidden",  "Burning", "Frozen",   "Distant", "Crimson",
    "Wild",     "Hollow",  "Electric", "Savage",  "Gentle",  "Restless", "Lonely",  "Midnight",
    "Northern", "Bitter",  "Shining",  "Iron",    "Velvet",  "Scarlet",  "Endless", "Fading",
    "Secret",   "Stolen",  "Wicked",   "Quiet",   "Lost",    "Brave",    "Dark",    "Bright",
    "Sacred",   "Rusty",   "Twisted",  "Sweet",   "Cold",    "Final",    "Dusty",   "Hungry",
    "Falling",  "Rising",  "Painted",  "Forgotten", "Wandering", "Sleeping", "Howling",
    "Glass",    "Paper",   "Copper",   "Marble",  "Emerald", "Amber",    "Silver",  "Purple",
    "Last",     "Little",  "Great",    "Black",   "Blue"};

constexpr std::array<std::string_view, 60> kNouns = {
    "River",    "Harbor",  "Mountain", "Garden",  "Empire",  "Kingdom", "Horizon", "Shadow",
    "Voyage",   "Promise", "Letter",   "Island",  "Thunder", "Highway", "Station", "Mirror",
    "Orchard",  "Canyon",  "Lantern",  "Compass", "Desert",  "Frontier", "Circus", "Carnival",
    "Witness",  "Stranger", "Prophet", "Dancer",  "Soldier", "Hunter",  "Pilgrim", "Widow",
    "Tower",    "Bridge",  "Forest",   "Valley",  "Ocean",   "Winter",  "Summer",  "Autumn",
    "Engine",   "Anthem",  "Ballad",   "Requiem", "Verdict", "Heist",   "Reunion", "Exodus",
    "Labyrinth", "Citadel", "Monsoon", "Eclipse", "Meridian", "Tide",   "Ember",   "Echo",
    "Falcon",   "Serpent", "Harvest",  "Parade"};

constexpr std::array<std::string_view, 18> kGenres = {
    "Action",  "Adventure", "Animation", "Comedy",  "Crime",    "Documentary",
    "Drama",   "Family",    "Fantasy",   "History", "Horror",   "Music",
    "Mystery", "Romance",   "Sci-Fi",    "Thriller", "War",     "Western"};

constexpr std::array<std::string_view, 12> kCountries = {
    "France", "Italy",  "Japan",  "Mexico", "Canada", "Brazil",
    "India",  "Sweden", "Norway", "Spain",  "Korea",  "Ireland"};

constexpr std::string_view kBoilerplate =
    "The film premiered at an international festival before its theatrical release and was "
    "later distributed on home video. Critics discussed the screenplay, the cast, the musical "
    "score and the cinematography, and the production was nominated for several awards.";

constexpr std::array<std::string_view, 14> kOnsets = {"b", "d", "f", "g", "k", "l", "m",
                                                      "n", "p", "r", "s", "t", "v", "z"};
constexpr std::array<std::string_view, 5> kVowels = {"a", "e", "i", "o", "u"};
constexpr std::array<std::string_view, 6> kCodas = {"", "n", "r", "l", "s", "x"};

// Pronounceable nonsense words, unique across the whole corpus.
class WordSource {
 public:
  explicit WordSource(Rng& rng) : rng_(rng) {}

  std::string next(std::size_t syllables) {
    for (;;) {
      std::string word;
      for (std::size_t s = 0; s < syllables; ++s) {
        word += kOnsets[rng_.uniform_index(kOnsets.size())];
        word += kVowels[rng_.uniform_index(kVowels.size())];
        word += kCodas[rng_.uniform_index(kCodas.size())];
      }
      if (word.size() >= 5 && used_.insert(word).second) return word;
    }
  }

  std::vector<std::string> many(std::size_t n, std::size_t syllables) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(next(syllables));
    return out;
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

std::string capitalized(std::string word) {
  if (!word.empty()) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  return word;
}

template <class T>
std::vector<T> sample(const std::vector<T>& from, std::size_t n, Rng& rng) {
  std::vector<T> copy = from;
  rng.shuffle(std::span(copy));
  copy.resize(std::min(n, copy.size()));
  return copy;
}

std::string join(const std::vector<std::string>& words, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

double draw_rating(Rng& rng, std::initializer_list<std::pair<double, double>> weights) {
  double u = rng.uniform01();
  for (const auto& [rating, p] : weights) {
    if (u < p) return rating;
    u -= p;
  }
  return std::prev(weights.end())->first;
}

enum class Taste { kLoved, kHatedNearby, kNeutralNearby, kHated, kOther };

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusParams& params) {
  const std::size_t n_items = params.clusters * params.subclusters * params.items_per_subcluster;
  if (n_items == 0 || params.clusters < 3 || params.subclusters < 4) {
    throw ConfigError("synthetic corpus needs >= 3 clusters of >= 4 sub-clusters");
  }
  if (n_items > kAdjectives.size() * kNouns.size()) {
    throw ConfigError("synthetic corpus is larger than the title space");
  }
  if (params.min_ratings > params.max_ratings || params.max_ratings > n_items) {
    throw ConfigError("synthetic rating counts are inconsistent with the catalog size");
  }
  Rng rng(params.seed);
  WordSource words(rng);

  struct Cluster {
    std::vector<std::string> genres;
    std::vector<std::string> vocabulary;
    std::vector<std::string> actors;
    std::string country;
  };
  struct Sub {
    std::vector<std::string> vocabulary;
    std::string director;
  };
  const auto generic = words.many(200, 2);
  std::vector<Cluster> clusters(params.clusters);
  std::vector<std::vector<Sub>> subs(params.clusters, std::vector<Sub>(params.subclusters));
  for (std::size_t c = 0; c < params.clusters; ++c) {
    auto& cl = clusters[c];
    std::vector<std::string> genre_pool(kGenres.begin(), kGenres.end());
    cl.genres = sample(genre_pool, 2, rng);
    cl.vocabulary = words.many(12, 3);
    for (std::size_t a = 0; a < 6; ++a) {
      cl.actors.push_back(capitalized(words.next(2)) + " " + capitalized(words.next(3)));
    }
    cl.country = std::string(kCountries[c % kCountries.size()]);
    for (auto& s : subs[c]) {
      s.vocabulary = words.many(8, 3);
      s.director = capitalized(words.next(2)) + " " + capitalized(words.next(3));
    }
  }

  // Titles: distinct adjective-noun pairs, none a substring of another.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < kAdjectives.size(); ++a) {
    for (std::size_t n = 0; n < kNouns.size(); ++n) pairs.emplace_back(a, n);
  }
  rng.shuffle(std::span(pairs));

  SyntheticCorpus corpus;
  std::vector<Item> items;
  std::vector<SyntheticCorpus::Position> position_of;
  std::vector<std::string> normalized;
  std::size_t next_pair = 0;
  for (std::size_t c = 0; c < params.clusters; ++c) {
    for (std::size_t s = 0; s < params.subclusters; ++s) {
      for (std::size_t n = 0; n < params.items_per_subcluster; ++n) {
        Item item;
        item.id = ItemId(fmt::format("m{:04}", items.size()));
        item.release_year = params.first_year +
                            static_cast<int>(rng.uniform_index(
                                static_cast<std::size_t>(params.last_year - params.first_year + 1)));
        for (;;) {
          if (next_pair >= pairs.size()) throw ConfigError("ran out of synthetic titles");
          const auto [a, w] = pairs[next_pair++];
          const bool article = rng.uniform01() < 0.2;
          std::string title = fmt::format("{} {}", kAdjectives[a], kNouns[w]);
          std::string raw = article ? title + ", The" : title;
          const std::string norm = normalize_title(raw, item.release_year);
          const bool clash = std::any_of(normalized.begin(), normalized.end(), [&](const auto& o) {
            return o.find(norm) != std::string::npos || norm.find(o) != std::string::npos;
          });
          if (clash) continue;
          item.raw_title = raw;
          item.normalized_title = norm;
          normalized.push_back(norm);
          break;
        }
        const auto& cl = clusters[c];
        const auto& sub = subs[c][s];
        item.genres = cl.genres;
        item.extra_metadata["tags"] = join(sample(sub.vocabulary, 3, rng), ", ");
        item.extra_metadata["directors"] = sub.director;
        item.extra_metadata["actors"] = join(sample(cl.actors, 2, rng), ", ");
        item.extra_metadata["country"] = cl.country;
        std::vector<std::string> body = sample(cl.vocabulary, 6, rng);
        for (auto& w : sample(sub.vocabulary, 5, rng)) body.push_back(std::move(w));
        for (auto& w : sample(generic, 4, rng)) body.push_back(std::move(w));
        rng.shuffle(std::span(body));
        item.supplement_text =
            fmt::format("{} The story follows {}.", kBoilerplate, join(body, " "));
        position_of.push_back({c, s});
        items.push_back(std::move(item));
      }
    }
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    corpus.positions.emplace(items[i].id, position_of[i]);
  }

  // Exposure popularity: Zipf over a random ranking.
  std::vector<std::size_t> rank(items.size());
  for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i;
  rng.shuffle(std::span(rank));
  std::vector<double> popularity(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    popularity[rank[i]] = std::pow(static_cast<double>(i + 1), -params.popularity_exponent);
  }

  for (std::size_t u = 0; u < params.users; ++u) {
    const UserId user(fmt::format("u{:04}", u));
    std::vector<std::size_t> order(params.clusters);
    for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
    rng.shuffle(std::span(order));
    // Two favourite clusters (two loved, two hated and one neutral
    // sub-cluster each) and one hated cluster.
    std::vector<std::vector<Taste>> taste(params.clusters,
                                          std::vector<Taste>(params.subclusters, Taste::kOther));
    for (std::size_t f = 0; f < 2; ++f) {
      std::vector<std::size_t> s_order(params.subclusters);
      for (std::size_t s = 0; s < s_order.size(); ++s) s_order[s] = s;
      rng.shuffle(std::span(s_order));
      for (std::size_t s = 0; s < s_order.size(); ++s) {
        taste[order[f]][s_order[s]] =
            s < 2 ? Taste::kLoved : s < 4 ? Taste::kHatedNearby : Taste::kNeutralNearby;
      }
    }
    for (auto& t : taste[order[2]]) t = Taste::kHated;

    // Weighted sampling without replacement (exponential keys).
    std::vector<std::pair<double, std::size_t>> keys;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto [c, s] = position_of[i];
      double interest = 0.3;
      switch (taste[c][s]) {
        case Taste::kLoved:
          interest = 8.0;
          break;
        case Taste::kHatedNearby:
        case Taste::kNeutralNearby:
          interest = 2.0;
          break;
        case Taste::kHated:
          interest = 1.5;
          break;
        case Taste::kOther:
          break;
      }
      const double weight = interest * popularity[i];
      const double draw = std::max(rng.uniform01(), 1e-300);
      keys.emplace_back(std::log(draw) / weight, i);
    }
    const std::size_t count =
        params.min_ratings + rng.uniform_index(params.max_ratings - params.min_ratings + 1);
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count), keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::size_t> chosen;
    for (std::size_t n = 0; n < count; ++n) chosen.push_back(keys[n].second);
    std::sort(chosen.begin(), chosen.end());
    for (const auto i : chosen) {
      const auto [c, s] = position_of[i];
      double rating = 3.0;
      switch (taste[c][s]) {
        case Taste::kLoved:
          rating = draw_rating(rng, {{5.0, 0.6}, {4.0, 0.35}, {3.0, 0.05}});
          break;
        case Taste::kHatedNearby:
        case Taste::kHated:
          rating = draw_rating(rng, {{1.0, 0.5}, {2.0, 0.45}, {3.0, 0.05}});
          break;
        case Taste::kNeutralNearby:
          rating = draw_rating(rng, {{2.0, 0.35}, {3.0, 0.4}, {4.0, 0.25}});
          break;
        case Taste::kOther:
          rating = draw_rating(rng, {{1.0, 0.2}, {2.0, 0.4}, {3.0, 0.3}, {4.0, 0.1}});
          break;
      }
      corpus.ratings.push_back({user, items[i].id, rating});
    }
  }
  corpus.catalog = Catalog(std::move(items));
  return corpus;
}

void write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticCorpus& corpus) {
  std::filesystem::create_directories(dir);
  std::ofstream ratings(dir / "ratings.tsv");
  std::ofstream items(dir / "items.tsv");
  std::ofstream supplement(dir / "supplement.jsonl");
  if (!ratings || !items || !supplement) {
    throw DataError(fmt::format("cannot write synthetic corpus under {}", dir.string()));
  }
  ratings << "userID\titemID\trating\n";
  for (const auto& r : corpus.ratings) {
    ratings << fmt::format("{}\t{}\t{}\n", r.user.str(), r.item.str(), r.rating);
  }
  items << "id\ttitle\tyear\tgenres\tactors\tcountry\tdirectors\ttags\n";
  for (const auto& item : corpus.catalog.items()) {
    auto multi = [&](const char* key) {
      std::string value = item.extra_metadata.at(key);
      std::string out;
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (value.compare(i, 2, ", ") == 0) {
          out += '|';
          ++i;
        } else {
          out += value[i];
        }
      }
      return out;
    };
    std::string genres;
    for (std::size_t g = 0; g < item.genres.size(); ++g) {
      if (g) genres += '|';
      genres += item.genres[g];
    }
    items << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", item.id.str(), item.raw_title,
                         item.release_year, genres, multi("actors"), multi("country"),
                         multi("directors"), multi("tags"));
    const nlohmann::json line = {{"item_id", item.id.str()},
                                 {"text", item.supplement_text.value_or("")}};
    supplement << line.dump() << '\n';
  }
}

}  // namespace convrec
