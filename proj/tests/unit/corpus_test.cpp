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
#include <set>

#include <gtest/gtest.h>

#include "convrec/corpus.hpp"
#include "convrec/error.hpp"
#include "fixtures.hpp"

namespace convrec {
namespace {

using testing::make_item;
using testing::rating;
using testing::TempDir;
using testing::write_file;

TEST(NormalizeTitle, MovesTrailingArticleAndAppendsYear) {
  EXPECT_EQ(normalize_title("Matrix, The", 1999), "The Matrix (1999)");
  EXPECT_EQ(normalize_title("Beautiful Mind, A", 2001), "A Beautiful Mind (2001)");
  EXPECT_EQ(normalize_title("American Tail, An", 1986), "An American Tail (1986)");
  EXPECT_EQ(normalize_title("Heat", 1995), "Heat (1995)");
}

TEST(NormalizeTitle, ReplacesExistingYearAndTrims) {
  EXPECT_EQ(normalize_title("  Heat (1995) ", 1995), "Heat (1995)");
  EXPECT_EQ(normalize_title("Matrix, The (1999)", 1999), "The Matrix (1999)");
}

TEST(Tokenize, LowercasesAlphanumericRuns) {
  EXPECT_EQ(tokenize("The Matrix (1999): Neo's choice!"),
            (std::vector<std::string>{"the", "matrix", "1999", "neo", "s", "choice"}));
  EXPECT_TRUE(tokenize("  -- ").empty());
}

TEST(TokenStats, TopFivePercentWithTiesIncluded) {
  // 40 distinct tokens: "a" x5, "b" x5, others once. ceil(0.05*40) = 2.
  std::vector<std::string> docs = {"a a a a a b b b b b"};
  std::string rest;
  for (int i = 0; i < 38; ++i) rest += fmt::format("t{} ", i);
  docs.push_back(rest);
  const auto stats = compute_token_stats(docs);
  EXPECT_EQ(stats.cutoff_frequency, 5u);
  EXPECT_TRUE(stats.is_pruned("a"));
  EXPECT_TRUE(stats.is_pruned("b"));
  EXPECT_FALSE(stats.is_pruned("t0"));

  // Three tokens tie at the boundary: all are pruned.
  const std::vector<std::string> tied = {"x x y y z z " + rest};
  const auto tied_stats = compute_token_stats(tied);
  EXPECT_TRUE(tied_stats.is_pruned("x"));
  EXPECT_TRUE(tied_stats.is_pruned("y"));
  EXPECT_TRUE(tied_stats.is_pruned("z"));
}

TEST(ContentDocument, LevelsAddSourcesMonotonically) {
  auto item = make_item("m1", "Matrix, The", 1999, {"Action", "Sci-Fi"});
  item.extra_metadata["directors"] = "Lana Wachowski";
  item.supplement_text = "A hacker learns the truth about reality.";
  const auto l1 = build_content_document(item, ContentLevel::kBasic);
  const auto l2 = build_content_document(item, ContentLevel::kMetadata);
  const auto l3 = build_content_document(item, ContentLevel::kSupplemented);
  EXPECT_EQ(l1, "Title: The Matrix (1999)\nYear: 1999\nGenres: Action, Sci-Fi\n");
  EXPECT_EQ(l2.rfind(l1, 0), 0u);
  EXPECT_NE(l2.find("Directors: Lana Wachowski"), std::string::npos);
  EXPECT_EQ(l3.rfind(l2, 0), 0u);
  EXPECT_NE(l3.find("hacker"), std::string::npos);
}

TEST(ContentDocument, MissingSupplementLeavesLevelThreeEqualToTwo) {
  auto item = make_item("m1", "Heat", 1995);
  item.extra_metadata["tags"] = "heist";
  EXPECT_EQ(build_content_document(item, ContentLevel::kSupplemented),
            build_content_document(item, ContentLevel::kMetadata));
}

TEST(ContentDocument, LevelFourDropsStopWordsAndFrequentTokens) {
  auto item = make_item("m1", "Matrix, The", 1999, {"Action"});
  item.supplement_text = "the hacker and the truth";
  const std::vector<std::string> corpus = {"the the the the the matrix matrix hacker", "one two three",
                                           "four five six", "seven eight nine ten",
                                           "eleven twelve thirteen fourteen fifteen",
                                           "sixteen seventeen eighteen nineteen twenty"};
  const auto stats = compute_token_stats(corpus);
  ASSERT_TRUE(stats.is_pruned("the"));
  const auto doc = build_content_document(item, ContentLevel::kPruned, &stats);
  for (const auto& token : tokenize(doc)) {
    EXPECT_FALSE(stop_words().contains(token)) << token;
    EXPECT_FALSE(stats.is_pruned(token)) << token;
  }
  EXPECT_NE(doc.find("hacker"), std::string::npos);
  EXPECT_THROW(build_content_document(item, ContentLevel::kPruned), ConfigError);
}

TEST(ContentLevel, FromIntValidates) {
  EXPECT_EQ(content_level_from_int(4), ContentLevel::kPruned);
  EXPECT_THROW(content_level_from_int(0), ConfigError);
  EXPECT_THROW(content_level_from_int(5), ConfigError);
}

std::vector<Interaction> profile(const std::string& user, int pos, int neg) {
  std::vector<Interaction> out;
  for (int i = 0; i < pos; ++i) out.push_back(rating(user, fmt::format("p{:03}", i), 4.0));
  for (int i = 0; i < neg; ++i) out.push_back(rating(user, fmt::format("n{:03}", i), 2.0));
  return out;
}

std::size_t positives(const std::vector<Interaction>& set) {
  return static_cast<std::size_t>(
      std::count_if(set.begin(), set.end(), [](const Interaction& i) { return i.positive(); }));
}

TEST(SplitUser, StratifiedSizesMatchProportionalOracle) {
  const auto interactions = profile("u", 100, 30);
  const auto split = split_user(interactions, SplitSize::count(10), SplitSize::fraction(0.33), 1);
  ASSERT_EQ(split.example_set.size(), 10u);
  ASSERT_EQ(split.evaluation_set.size(), 43u);
  ASSERT_EQ(split.feedback_set.size(), 77u);
  // Largest-remainder shares of 100/130: 7.69 -> 8 and 33.08 -> 33.
  EXPECT_EQ(positives(split.example_set), 8u);
  EXPECT_EQ(positives(split.evaluation_set), 33u);
  EXPECT_EQ(positives(split.feedback_set), 59u);
}

TEST(SplitUser, SetsAreDisjointAndStratifiedForManyProfiles) {
  for (int pos = 2; pos < 40; pos += 3) {
    for (int neg = 2; neg < 30; neg += 4) {
      const auto interactions = profile("u", pos, neg);
      if (interactions.size() < 8) continue;
      const auto split = split_user(interactions, SplitSize::count(3),
                                    SplitSize::fraction(0.33), static_cast<std::uint64_t>(pos));
      std::set<ItemId> seen;
      for (const auto* set : {&split.example_set, &split.feedback_set, &split.evaluation_set}) {
        for (const auto& i : *set) EXPECT_TRUE(seen.insert(i.item).second);
      }
      EXPECT_EQ(seen.size(), interactions.size());
      const double fraction = static_cast<double>(pos) / static_cast<double>(pos + neg);
      for (const auto* set : {&split.example_set, &split.evaluation_set}) {
        const double share = static_cast<double>(positives(*set)) / static_cast<double>(set->size());
        EXPECT_LE(std::abs(share - fraction), 1.0 / static_cast<double>(set->size()) + 1e-12)
            << pos << "/" << neg;
      }
    }
  }
}

TEST(SplitUser, DeterministicPerSeed) {
  const auto interactions = profile("u", 30, 10);
  const auto a = split_user(interactions, SplitSize::count(10), SplitSize::fraction(0.33), 5);
  const auto b = split_user(interactions, SplitSize::count(10), SplitSize::fraction(0.33), 5);
  const auto c = split_user(interactions, SplitSize::count(10), SplitSize::fraction(0.33), 6);
  auto ids = [](const std::vector<Interaction>& v) {
    std::vector<ItemId> out;
    for (const auto& i : v) out.push_back(i.item);
    return out;
  };
  EXPECT_EQ(ids(a.example_set), ids(b.example_set));
  EXPECT_EQ(ids(a.evaluation_set), ids(b.evaluation_set));
  EXPECT_NE(ids(a.example_set), ids(c.example_set));
}

TEST(SplitUser, RejectsProfilesThatCannotBeSplit) {
  EXPECT_THROW(split_user(profile("u", 8, 2), SplitSize::count(10), SplitSize::fraction(0.33), 1),
               DataError);
  EXPECT_THROW(split_user(profile("u", 20, 1), SplitSize::count(5), SplitSize::fraction(0.3), 1),
               DataError);
}

TEST(SampleUsers, AppliesBandAndConstraintsDeterministically) {
  std::vector<Interaction> all;
  for (int u = 0; u < 20; ++u) {
    const auto p = profile(fmt::format("u{:02}", u), 10 + u, u < 5 ? 1 : 8);
    all.insert(all.end(), p.begin(), p.end());
  }
  UserSampling sampling;
  sampling.count = 5;
  sampling.lo_percentile = 25;
  sampling.hi_percentile = 100;
  sampling.min_total = 10;
  sampling.min_dislikes = 5;
  sampling.seed = 3;
  const auto a = sample_users(all, sampling);
  const auto b = sample_users(all, sampling);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 5u);
  for (const auto& user : a) EXPECT_GE(user, UserId("u05"));
  sampling.count = 50;
  EXPECT_THROW(sample_users(all, sampling), DataError);
}

TEST(LoadRatings, ParsesTsvAndRejectsBadRows) {
  TempDir dir("ratings");
  write_file(dir / "r.tsv", "userID\tmovieID\trating\tdate\nu1\tm1\t4.5\tx\nu1\tm2\t1\tx\n");
  const auto ratings = load_ratings(dir / "r.tsv");
  ASSERT_EQ(ratings.size(), 2u);
  EXPECT_EQ(ratings[0].item, ItemId("m1"));
  EXPECT_DOUBLE_EQ(ratings[0].rating, 4.5);

  write_file(dir / "bad.tsv", "userID\titemID\trating\nu1\tm1\tseven\n");
  try {
    load_ratings(dir / "bad.tsv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  write_file(dir / "range.tsv", "userID\titemID\trating\nu1\tm1\t6\n");
  EXPECT_THROW(load_ratings(dir / "range.tsv"), Error);
  EXPECT_THROW(load_ratings(dir / "missing.tsv"), Error);
}

TEST(LoadItems, ReadsMultiValuedFieldsAndSupplement) {
  TempDir dir("items");
  write_file(dir / "items.tsv",
             "id\ttitle\tyear\tgenres\ttags\nm1\tMatrix, The\t1999\tAction|Sci-Fi\tcyberpunk|hacker\n"
             "m2\tHeat\t1995\tCrime\t\n");
  write_file(dir / "sup.jsonl",
             "{\"item_id\": \"m1\", \"text\": \"Neo wakes up.\"}\n"
             "{\"item_id\": \"zz\", \"text\": \"unknown\"}\n");
  const auto catalog = load_items(dir / "items.tsv", dir / "sup.jsonl");
  ASSERT_EQ(catalog.size(), 2u);
  const auto& matrix = catalog.at(ItemId("m1"));
  EXPECT_EQ(matrix.normalized_title, "The Matrix (1999)");
  EXPECT_EQ(matrix.genres, (std::vector<std::string>{"Action", "Sci-Fi"}));
  EXPECT_NE(matrix.extra_metadata.at("tags").find("cyberpunk"), std::string::npos);
  EXPECT_EQ(matrix.supplement_text.value_or(""), "Neo wakes up.");
  EXPECT_FALSE(catalog.at(ItemId("m2")).supplement_text.has_value());
  EXPECT_EQ(catalog.max_year(), 1999);
  EXPECT_THROW(catalog.at(ItemId("nope")), DataError);

  write_file(dir / "dup.tsv", "id\ttitle\tyear\tgenres\nm1\tA\t1990\tX\nm1\tB\t1991\tY\n");
  EXPECT_THROW(load_items(dir / "dup.tsv"), DataError);
}

TEST(SplitsFile, RoundTrips) {
  TempDir dir("splits");
  const auto split = split_user(profile("u", 20, 10), SplitSize::count(5),
                                SplitSize::fraction(0.33), 2);
  const std::vector<UserSplit> splits{split};
  save_splits(dir / "splits.jsonl", splits);
  const auto loaded = load_splits(dir / "splits.jsonl");
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].user, split.user);
  ASSERT_EQ(loaded[0].evaluation_set.size(), split.evaluation_set.size());
  for (std::size_t i = 0; i < split.evaluation_set.size(); ++i) {
    EXPECT_EQ(loaded[0].evaluation_set[i].item, split.evaluation_set[i].item);
    EXPECT_EQ(loaded[0].evaluation_set[i].rating, split.evaluation_set[i].rating);
  }
}

TEST(CatalogFile, RoundTrips) {
  TempDir dir("catalog");
  auto item = make_item("m1", "Matrix, The", 1999, {"Action"});
  item.extra_metadata["country"] = "USA";
  item.supplement_text = "text";
  const Catalog catalog({item, make_item("m2", "Heat", 1995)});
  save_catalog(dir / "catalog.jsonl", catalog);
  const auto loaded = load_catalog(dir / "catalog.jsonl");
  ASSERT_EQ(loaded.size(), 2u);
  const auto& m1 = loaded.at(ItemId("m1"));
  EXPECT_EQ(m1.normalized_title, "The Matrix (1999)");
  EXPECT_EQ(m1.extra_metadata.at("country"), "USA");
  EXPECT_EQ(m1.supplement_text.value_or(""), "text");
}

}  // namespace
}  // namespace convrec
