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

#include <cmath>
#include <unordered_map>

#include <gtest/gtest.h>

#include "convrec/error.hpp"
#include "convrec/metrics.hpp"
#include "convrec/relevancy.hpp"
#include "fixtures.hpp"

namespace convrec {
namespace {

using testing::rating;

// Target t plus neighbours at cosine 0.9 (a), 0.8 (b) and 0 (c).
struct Neighbourhood {
  EmbeddingStore store{3, ContentLevel::kBasic};
  QuantileIndex quantiles;

  explicit Neighbourhood(double eps_a = 0.5, double eps_b = 0.5, double eps_c = -1.0) {
    store.insert(ItemId("t"), std::vector<double>{1, 0, 0});
    store.insert(ItemId("a"), std::vector<double>{0.9, std::sqrt(1 - 0.81), 0});
    store.insert(ItemId("b"), std::vector<double>{0.8, 0, 0.6});
    store.insert(ItemId("c"), std::vector<double>{0, 0, 1});
    quantiles = QuantileIndex(0.99, {{ItemId("t"), 0.5},
                                     {ItemId("a"), eps_a},
                                     {ItemId("b"), eps_b},
                                     {ItemId("c"), eps_c}});
  }
};

TEST(EstimateRating, WeightedMeanOfAdmittedNeighbours) {
  const Neighbourhood n;
  const std::vector<Interaction> one{rating("u", "a", 4)};
  EXPECT_DOUBLE_EQ(*estimate_rating(ItemId("t"), one, n.store, n.quantiles), 4.0);
  const std::vector<Interaction> two{rating("u", "a", 5), rating("u", "b", 2)};
  EXPECT_NEAR(*estimate_rating(ItemId("t"), two, n.store, n.quantiles),
              (0.9 * 5 + 0.8 * 2) / 1.7, 1e-12);
}

TEST(EstimateRating, ThresholdsAndNonPositiveSimilaritiesExclude) {
  // a's threshold is above its similarity to t; c is orthogonal (sim 0 is
  // never admitted even with a negative threshold).
  const Neighbourhood n(0.95, 0.5, -1.0);
  const std::vector<Interaction> ref{rating("u", "a", 5), rating("u", "b", 2), rating("u", "c", 5)};
  EXPECT_NEAR(*estimate_rating(ItemId("t"), ref, n.store, n.quantiles), 2.0, 1e-12);
  const std::vector<Interaction> none{rating("u", "c", 5)};
  EXPECT_FALSE(estimate_rating(ItemId("t"), none, n.store, n.quantiles).has_value());
  EXPECT_FALSE(estimate_rating(ItemId("t"), {}, n.store, n.quantiles).has_value());
}

TEST(EstimateRating, MissingEmbeddingNamesTheItem) {
  const Neighbourhood n;
  const std::vector<Interaction> ref{rating("u", "ghost", 5)};
  try {
    estimate_rating(ItemId("t"), ref, n.store, n.quantiles);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Judge, BoundaryIsInclusive) {
  const Neighbourhood n;
  const std::vector<Interaction> three{rating("u", "a", 3), rating("u", "b", 3)};
  const auto at_three = judge(ItemId("t"), three, n.store, n.quantiles);
  EXPECT_TRUE(at_three.relevant);
  EXPECT_EQ(at_three.admitted_neighbors, 2u);

  const std::vector<Interaction> below{rating("u", "a", 2.999)};
  EXPECT_FALSE(judge(ItemId("t"), below, n.store, n.quantiles).relevant);

  const std::vector<Interaction> none{rating("u", "c", 5)};
  const auto absent = judge(ItemId("t"), none, n.store, n.quantiles);
  EXPECT_FALSE(absent.relevant);
  EXPECT_FALSE(absent.estimated_rating.has_value());
  EXPECT_EQ(absent.admitted_neighbors, 0u);
}

RankedList list_of(std::initializer_list<int> relevance, std::size_t unmatched = 0) {
  RankedList list;
  int i = 0;
  for (const int r : relevance) list.items.push_back({ItemId(fmt::format("i{}", i++)), r == 1});
  list.unmatched_count = unmatched;
  return list;
}

TEST(Precision, ExcludesUnmatched) {
  EXPECT_DOUBLE_EQ(*precision(list_of({1, 1, 1, 0}, 1)), 0.75);
  EXPECT_DOUBLE_EQ(*precision(list_of({1, 1})), 1.0);
  EXPECT_DOUBLE_EQ(*precision(list_of({0, 0})), 0.0);
  EXPECT_FALSE(precision(list_of({}, 3)).has_value());
}

TEST(Ndcg, HandComputedValues) {
  EXPECT_DOUBLE_EQ(*ndcg(list_of({1, 1, 0})), 1.0);
  EXPECT_NEAR(*ndcg(list_of({0, 1})), 1.0 / std::log2(3.0), 1e-15);
  EXPECT_DOUBLE_EQ(*ndcg(list_of({0, 0, 0})), 0.0);
  EXPECT_FALSE(ndcg(list_of({})).has_value());
}

TEST(AveragePrecision, HandComputedValues) {
  EXPECT_NEAR(*average_precision(list_of({1, 0, 1})), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(*average_precision(list_of({1, 1, 1})), 1.0);
  EXPECT_DOUBLE_EQ(*average_precision(list_of({0, 0})), 0.0);
  EXPECT_FALSE(average_precision(list_of({})).has_value());
}

TEST(Ils, IdenticalOrthogonalAndTooFew) {
  EmbeddingStore store(2, ContentLevel::kBasic);
  store.insert(ItemId("x"), std::vector<double>{1, 0});
  store.insert(ItemId("y"), std::vector<double>{0, 1});
  store.insert(ItemId("z"), std::vector<double>{1, 1});
  const std::vector<ItemId> same{ItemId("x"), ItemId("x")};
  EXPECT_DOUBLE_EQ(*ils(store, same), 1.0);
  const std::vector<ItemId> ortho{ItemId("x"), ItemId("y")};
  EXPECT_DOUBLE_EQ(*ils(store, ortho), 0.0);
  const std::vector<ItemId> three{ItemId("x"), ItemId("y"), ItemId("z")};
  EXPECT_NEAR(*ils(store, three), (0.0 + 2.0 / std::sqrt(2.0)) / 3.0, 1e-15);
  const std::vector<ItemId> one{ItemId("x")};
  EXPECT_FALSE(ils(store, one).has_value());
}

TEST(Coverage, CopiesOfReferenceItemsAreAdmitted) {
  EmbeddingStore store(10, ContentLevel::kBasic);
  std::unordered_map<ItemId, double> eps;
  std::vector<Interaction> reference;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> v(10, 0.0);
    v[static_cast<std::size_t>(i)] = 1.0;
    const ItemId id(fmt::format("r{}", i));
    store.insert(id, v);
    eps[id] = 0.99;
    reference.push_back({UserId("u"), id, 4.0});
  }
  const QuantileIndex quantiles(0.99, eps);
  const std::vector<ItemId> four{ItemId("r0"), ItemId("r1"), ItemId("r2"), ItemId("r3")};
  EXPECT_DOUBLE_EQ(coverage(four, reference, store, quantiles), 0.4);
  EXPECT_DOUBLE_EQ(coverage({}, reference, store, quantiles), 0.0);
  std::vector<ItemId> all;
  for (const auto& r : reference) all.push_back(r.item);
  const auto once = all;
  all.insert(all.end(), once.begin(), once.end());
  EXPECT_DOUBLE_EQ(coverage(all, reference, store, quantiles), 1.0);
  EXPECT_DOUBLE_EQ(coverage(four, {}, store, quantiles), 0.0);
}

TEST(PopularityTable, CountsSessionsNotOccurrences) {
  const std::vector<std::vector<ItemId>> sessions{
      {ItemId("a"), ItemId("a"), ItemId("b")}, {ItemId("a")}, {ItemId("a"), ItemId("c")},
      {ItemId("a")},                           {ItemId("a")}, {ItemId("a"), ItemId("c"), ItemId("b")}};
  const auto table = popularity_table(sessions);
  EXPECT_DOUBLE_EQ(table.at(ItemId("a")), 1.0);
  EXPECT_DOUBLE_EQ(table.at(ItemId("b")), 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(table.at(ItemId("c")), 2.0 / 6.0);
  EXPECT_FALSE(table.contains(ItemId("d")));

  const std::vector<std::vector<ItemId>> half{{ItemId("x")}, {ItemId("x")}, {ItemId("x")},
                                              {ItemId("y")}, {ItemId("y")}, {ItemId("y")}};
  EXPECT_DOUBLE_EQ(popularity_table(half).at(ItemId("x")), 0.5);
}

TEST(Novelty, AlgebraicOracles) {
  const std::unordered_map<ItemId, double> everywhere{{ItemId("a"), 1.0}, {ItemId("b"), 1.0}};
  const std::vector<ItemId> ab{ItemId("a"), ItemId("b")};
  EXPECT_DOUBLE_EQ(novelty(ab, everywhere, 2), 0.0);

  // 4 sessions (|U| = 2, 2 replicates), 3 slots each, every item unique.
  std::vector<std::vector<ItemId>> sessions;
  for (int s = 0; s < 4; ++s) {
    sessions.push_back({});
    for (int i = 0; i < 3; ++i) sessions.back().push_back(ItemId(fmt::format("s{}i{}", s, i)));
  }
  const auto table = popularity_table(sessions);
  EXPECT_DOUBLE_EQ(novelty(sessions[0], table, 3), 1.0 - 1.0 / 4.0);

  // Unmatched slots stay in the denominator.
  const std::vector<ItemId> partial{sessions[0][0], sessions[0][1]};
  EXPECT_LT(novelty(partial, table, 3), novelty(sessions[0], table, 3));
  EXPECT_DOUBLE_EQ(novelty(partial, table, 3), 2 * 0.75 / 3.0);
  EXPECT_THROW(novelty(ab, everywhere, 1), DataError);
}

TEST(UnmatchedRatio, OverAllRequestedSlots) {
  EXPECT_NEAR(unmatched_ratio(2, 10, 5, 20), 2.0 / 60.0, 1e-15);
  EXPECT_DOUBLE_EQ(unmatched_ratio(0, 10, 5, 20), 0.0);
  EXPECT_DOUBLE_EQ(unmatched_ratio(60, 10, 5, 20), 1.0);
  EXPECT_DOUBLE_EQ(unmatched_ratio(20, 10, 1, 20), 1.0);
}

}  // namespace
}  // namespace convrec
