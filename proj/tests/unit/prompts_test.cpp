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

#include <cstdlib>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "convrec/error.hpp"
#include "convrec/prompts.hpp"
#include "fixtures.hpp"

namespace convrec {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::write_file;

// Compares against tests/golden/<name>.txt. With CONVREC_UPDATE_GOLDEN set
// the file is rewritten instead.
void expect_golden(const std::string& name, const std::string& actual) {
  const auto path = std::filesystem::path(CONVREC_GOLDEN_DIR) / (name + ".txt");
  if (std::getenv("CONVREC_UPDATE_GOLDEN") != nullptr) {
    write_file(path, actual);
    return;
  }
  ASSERT_TRUE(std::filesystem::exists(path)) << path;
  EXPECT_EQ(actual, read_file(path)) << "golden " << name;
}

std::vector<ExampleMovie> examples() {
  return {{"The Matrix (1999)", true}, {"Heat (1995)", false}, {"Alien (1979)", true}};
}

SyntheticExample demo(bool reasoning) {
  SyntheticExample s;
  s.movies = {{"Blade Runner (1982)", true}, {"Notting Hill (1999)", false}};
  s.recommendations = {"Gattaca (1997)", "Dark City (1998)"};
  if (reasoning) {
    s.reasoning = {"step 1: I liked Blade Runner (1982), so movies similar to it are good candidates.",
                   "step 2: I disliked Notting Hill (1999), so movies similar to it are poor candidates.",
                   "step 3: Rank the candidates."};
  }
  return s;
}

SessionConfig session(PromptStyle style, int k, int p, bool popular) {
  SessionConfig c;
  c.prompt_style = style;
  c.k = k;
  c.p = p;
  c.k_f = 20;
  c.prompt_popular = popular;
  c.release_cutoff = 2011;
  return c;
}

TEST(PromptGolden, InitialZero) {
  const auto ex = examples();
  expect_golden("initial_zero_k10",
                build_initial_prompt(session(PromptStyle::kZero, 10, 5, true), ex));
  expect_golden("initial_zero_p1_less_popular",
                build_initial_prompt(session(PromptStyle::kZero, 10, 1, false), ex));
}

TEST(PromptGolden, InitialFewAndCot) {
  const auto ex = examples();
  const auto few = demo(false);
  const auto cot = demo(true);
  expect_golden("initial_few", build_initial_prompt(session(PromptStyle::kFew, 5, 3, true), ex, &few));
  expect_golden("initial_cot", build_initial_prompt(session(PromptStyle::kCot, 5, 3, true), ex, &cot));
}

TEST(PromptGolden, RepromptsAndFinal) {
  const std::vector<std::string> good{"Gattaca (1997)", "Dark City (1998)"};
  const std::vector<std::string> bad{"Notting Hill (1999)"};
  const std::vector<std::string> none;
  expect_golden("reprompt_feedback", build_reprompt(good, bad, 10, {2011, true}));
  expect_golden("reprompt_only_liked", build_reprompt(good, none, 10, {2011, false}));
  expect_golden("reprompt_no_feedback", build_reprompt(none, none, 1, {2011, true}));
  expect_golden("final", build_final_prompt(20, {2011, true}));
  expect_golden("final_with_feedback", build_final_prompt(good, bad, 20, {2011, false}));
}

TEST(InitialPrompt, RequestsKOrKfAndListsEveryExample) {
  const auto ex = examples();
  const auto reprompting = build_initial_prompt(session(PromptStyle::kZero, 10, 5, true), ex);
  EXPECT_NE(reprompting.find("Recommend 10 movies released on or before 2011"), std::string::npos);
  const auto single = build_initial_prompt(session(PromptStyle::kZero, 10, 1, true), ex);
  EXPECT_NE(single.find("Recommend 20 movies"), std::string::npos);
  for (const auto& movie : ex) {
    const std::string line =
        "- " + movie.title + (movie.liked ? " [liked]" : " [disliked]");
    EXPECT_NE(reprompting.find(line), std::string::npos) << line;
  }
  EXPECT_EQ(reprompting.find(kLessPopularInstruction), std::string::npos);
}

TEST(InitialPrompt, LessPopularSentenceIsVerbatim) {
  const auto ex = examples();
  const auto text = build_initial_prompt(session(PromptStyle::kZero, 10, 1, false), ex);
  EXPECT_NE(text.find("Try to recommend movies that are less popular."), std::string::npos);
}

TEST(InitialPrompt, SingularNounForOneMovie) {
  const auto ex = examples();
  auto config = session(PromptStyle::kZero, 1, 2, true);
  EXPECT_NE(build_initial_prompt(config, ex).find("Recommend 1 movie released"), std::string::npos);
}

TEST(InitialPrompt, InjectionCompleteness) {
  const auto ex = examples();
  const auto few = demo(false);
  for (const int k : {3, 7, 12}) {
    for (const auto style : {PromptStyle::kZero, PromptStyle::kFew}) {
      auto config = session(style, k, 4, true);
      config.release_cutoff = 1987;
      const auto text = build_initial_prompt(config, ex, &few);
      std::size_t cutoffs = 0;
      for (auto pos = text.find("1987"); pos != std::string::npos; pos = text.find("1987", pos + 1)) {
        ++cutoffs;
      }
      EXPECT_EQ(cutoffs, 1u);
      EXPECT_NE(text.find(fmt::format("Recommend {} movies", k)), std::string::npos);
      EXPECT_EQ(text.find('{'), std::string::npos);
    }
  }
}

TEST(InitialPrompt, Errors) {
  const auto ex = examples();
  EXPECT_THROW(build_initial_prompt(session(PromptStyle::kZero, 10, 1, true), {}), ConfigError);
  EXPECT_THROW(build_initial_prompt(session(PromptStyle::kFew, 10, 1, true), ex), ConfigError);
  const auto few = demo(false);
  EXPECT_THROW(build_initial_prompt(session(PromptStyle::kCot, 10, 1, true), ex, &few), ConfigError);
}

TEST(RenderTemplate, PlaceholdersAndEscapes) {
  EXPECT_EQ(render_template("a {x} b {{literal}} {y}", {{"x", "1"}, {"y", "2"}}),
            "a 1 b {literal} 2");
  EXPECT_THROW(render_template("{missing}", {}), ConfigError);
  EXPECT_THROW(render_template("{open", {}), ConfigError);
}

TEST(PromptTemplates, LoadOverridesBuiltins) {
  TempDir dir("templates");
  write_file(dir / "final.txt", "Final {count} please.{less_popular}\n");
  const auto templates = PromptTemplates::load(dir.path());
  EXPECT_EQ(build_final_prompt(5, {2000, false}, templates),
            "Final 5 please.\nTry to recommend movies that are less popular.");
  EXPECT_EQ(templates.get("initial_zero"), PromptTemplates::builtin().get("initial_zero"));
  EXPECT_THROW(templates.get("nope"), ConfigError);
  EXPECT_THROW(PromptTemplates::load(dir / "missing"), ConfigError);
}

TEST(PromptTemplates, BuiltinsMatchRepositoryFiles) {
  for (const auto& entry : std::filesystem::directory_iterator(CONVREC_TEMPLATE_DIR)) {
    if (entry.path().extension() != ".txt") continue;
    auto text = read_file(entry.path());
    if (!text.empty() && text.back() == '\n') text.pop_back();
    EXPECT_EQ(PromptTemplates::builtin().get(entry.path().stem().string()), text)
        << entry.path();
  }
}

// Ten 2-d items on a half circle; m0..m4 near angle 0, m5..m9 near angle pi.
testing::SmallWorld arc_world() {
  const double pi = std::acos(-1.0);
  std::vector<Item> items;
  testing::SmallWorld world;
  world.store = EmbeddingStore(2, ContentLevel::kBasic);
  for (int i = 0; i < 10; ++i) {
    const double angle = (i < 5 ? 0.05 * i : pi - 0.05 * (i - 5));
    const auto id = fmt::format("m{}", i);
    items.push_back(testing::make_item(id, fmt::format("Movie {}", i), 1990 + i));
    world.store.insert(ItemId(id), std::vector<double>{std::cos(angle), std::sin(angle)});
  }
  world.catalog = Catalog(std::move(items));
  return world;
}

TEST(SyntheticExample, StructureAndDeterminism) {
  const auto world = arc_world();
  const auto a = build_synthetic_example(world.catalog, world.store, 4, 2, 9, PromptStyle::kFew);
  const auto b = build_synthetic_example(world.catalog, world.store, 4, 2, 9, PromptStyle::kFew);
  ASSERT_EQ(a.movies.size(), 4u);
  EXPECT_EQ(a.recommendations.size(), 2u);
  EXPECT_TRUE(a.reasoning.empty());
  int liked = 0;
  for (const auto& m : a.movies) liked += m.liked ? 1 : 0;
  EXPECT_EQ(liked, 2);
  for (std::size_t i = 0; i < a.movies.size(); ++i) EXPECT_EQ(a.movies[i].title, b.movies[i].title);
  EXPECT_EQ(a.recommendations, b.recommendations);
  std::set<std::string> titles;
  for (const auto& m : a.movies) titles.insert(m.title);
  for (const auto& r : a.recommendations) EXPECT_TRUE(titles.insert(r).second) << r;
}

TEST(SyntheticExample, LikedAreCloseAndDemosFollowThem) {
  const auto world = arc_world();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = build_synthetic_example(world.catalog, world.store, 4, 2, seed, PromptStyle::kCot);
    std::vector<int> liked_sides, disliked_sides;
    for (const auto& m : s.movies) {
      const int index = m.title[6] - '0';
      (m.liked ? liked_sides : disliked_sides).push_back(index < 5 ? 0 : 1);
    }
    ASSERT_EQ(liked_sides.size(), 2u);
    EXPECT_EQ(liked_sides[0], liked_sides[1]);
    for (const int side : disliked_sides) EXPECT_NE(side, liked_sides[0]);
    for (const auto& r : s.recommendations) EXPECT_EQ(r[6] - '0' < 5 ? 0 : 1, liked_sides[0]) << r;
    ASSERT_EQ(s.reasoning.size(), 5u);
    EXPECT_EQ(s.reasoning[0].rfind("step 1: I ", 0), 0u);
    EXPECT_EQ(s.reasoning[4].rfind("step 5: Rank", 0), 0u);
  }
}

TEST(SyntheticExample, ExcludedItemsNeverAppear) {
  const auto world = arc_world();
  const std::unordered_set<ItemId> exclude{ItemId("m0"), ItemId("m1"), ItemId("m5")};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = build_synthetic_example(world.catalog, world.store, 3, 2, seed,
                                           PromptStyle::kFew, exclude);
    for (const auto& m : s.movies) {
      EXPECT_NE(m.title, "Movie 0 (1990)");
      EXPECT_NE(m.title, "Movie 1 (1991)");
      EXPECT_NE(m.title, "Movie 5 (1995)");
    }
    for (const auto& r : s.recommendations) {
      EXPECT_NE(r, "Movie 0 (1990)");
      EXPECT_NE(r, "Movie 5 (1995)");
    }
  }
  EXPECT_THROW(build_synthetic_example(world.catalog, world.store, 4, 2, 0, PromptStyle::kZero),
               ConfigError);
  EXPECT_THROW(build_synthetic_example(world.catalog, world.store, 8, 5, 0, PromptStyle::kFew),
               DataError);
}

}  // namespace
}  // namespace convrec
