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

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "convrec/corpus.hpp"
#include "convrec/embedding.hpp"
#include "convrec/rng.hpp"

namespace convrec::testing {

// Directory removed when the fixture goes out of scope.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(stable_hash(tag) ^ static_cast<std::uint64_t>(
                                   std::filesystem::file_time_type::clock::now()
                                       .time_since_epoch()
                                       .count()));
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("convrec-{}-{:016x}", tag, rng.next());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Item make_item(const std::string& id, const std::string& title, int year,
                      std::vector<std::string> genres = {"Drama"}) {
  Item item;
  item.id = ItemId(id);
  item.raw_title = title;
  item.normalized_title = normalize_title(title, year);
  item.release_year = year;
  item.genres = std::move(genres);
  return item;
}

// Items with hand-placed vectors: id, title, year, vector.
struct PlacedItem {
  std::string id;
  std::string title;
  int year;
  std::vector<double> vector;
};

struct SmallWorld {
  Catalog catalog;
  EmbeddingStore store;
};

inline SmallWorld small_world(std::initializer_list<PlacedItem> placed) {
  std::vector<Item> items;
  SmallWorld world;
  world.store = EmbeddingStore(placed.begin()->vector.size(), ContentLevel::kPruned);
  for (const auto& p : placed) {
    items.push_back(make_item(p.id, p.title, p.year));
    world.store.insert(ItemId(p.id), p.vector);
  }
  world.catalog = Catalog(std::move(items));
  return world;
}

inline Interaction rating(const std::string& user, const std::string& item, double value) {
  return {UserId(user), ItemId(item), value};
}

}  // namespace convrec::testing
