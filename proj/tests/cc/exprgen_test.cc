// Copyright 2026 The RefSeg Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "refseg/exprgen.h"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace refseg {
namespace {

using nlohmann::json;

ErrorCode ParseCode(const std::string& text, const Taxonomy& t) {
  try {
    Parse(text, t);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "'" << text << "' parsed";
  return ErrorCode::kInvalidArgument;
}

// Counts template instantiations straight from the serialized document:
// for each referable category, (1 + own attributes) * (1 + relations that
// list it as a subject).
std::size_t ExpectedExpressionCount(const json& doc) {
  std::size_t total = 0;
  for (const json& c : doc["categories"]) {
    if (c.contains("referable") && !c["referable"].get<bool>()) continue;
    const std::string name = c["name"];
    std::size_t attrs = 0, rels = 0;
    for (const json& a : doc["attributes"]) attrs += a["category"] == name;
    for (const json& r : doc["relations"]) {
      for (const json& s : r["subjects"]) rels += s == name;
    }
    total += (1 + attrs) * (1 + rels);
  }
  return total;
}

TEST(ExprgenTest, EnumerationMatchesCountingOracle) {
  const Taxonomy t = RefSegRsTaxonomy();
  const json doc = json::parse(SerializeTaxonomy(t));
  const auto all = EnumerateExpressions(t);
  EXPECT_EQ(all.size(), ExpectedExpressionCount(doc));
  std::set<std::string> texts;
  for (const Expression& e : all) texts.insert(e.text);
  EXPECT_EQ(texts.size(), all.size());
}

TEST(ExprgenTest, EnumerationOrder) {
  const Taxonomy t = RefSegRsTaxonomy();
  const auto all = EnumerateExpressions(t);
  ASSERT_FALSE(all.empty());
  EXPECT_EQ(all.front().category, t.ReferableCategories().front()->name);
  EXPECT_FALSE(all.front().attribute);
  EXPECT_FALSE(all.front().relation);
}

TEST(ExprgenTest, ParseInvertsRenderForEveryExpression) {
  const Taxonomy t = RefSegRsTaxonomy();
  for (const Expression& e : EnumerateExpressions(t)) {
    const Expression back = Parse(e.text, t);
    EXPECT_TRUE(back.SameStructure(e)) << e.text;
    EXPECT_EQ(back.text, e.text);
    std::string shouty = "  ";
    for (char ch : e.text) {
      shouty += ch == ' ' ? std::string("\t  ") : std::string(1, std::toupper(ch));
    }
    EXPECT_TRUE(Parse(shouty, t).SameStructure(e)) << shouty;
  }
}

TEST(ExprgenTest, SpansCoverTextInOrder) {
  const Taxonomy t = RefSegRsTaxonomy();
  for (const Expression& e : EnumerateExpressions(t)) {
    const RenderedExpression r = Render(t, e.category, e.attribute, e.relation);
    EXPECT_EQ(r.text, e.text);
    std::string rebuilt;
    std::map<SpanRole, std::string> pieces;
    for (const ExpressionSpan& s : r.spans) {
      ASSERT_LE(s.end, r.text.size());
      ASSERT_LT(s.start, s.end);
      if (!rebuilt.empty()) rebuilt += ' ';
      rebuilt += r.text.substr(s.start, s.end - s.start);
      pieces[s.role] = r.text.substr(s.start, s.end - s.start);
    }
    EXPECT_EQ(rebuilt, r.text);
    EXPECT_EQ(pieces[SpanRole::kCategory], e.category);
    EXPECT_EQ(pieces.count(SpanRole::kAttribute) != 0, e.attribute.has_value());
    if (e.attribute) EXPECT_EQ(pieces[SpanRole::kAttribute], *e.attribute);
    if (e.relation) EXPECT_EQ(pieces[SpanRole::kRelation], *e.relation);
  }
}

TEST(ExprgenTest, RenderFixture) {
  const Taxonomy t = RefSegRsTaxonomy();
  const RenderedExpression r =
      Render(t, "vehicle", std::string("light-duty"), std::string("driving on the road"));
  EXPECT_EQ(r.text, "light-duty vehicle driving on the road");
  ASSERT_EQ(r.spans.size(), 3u);
  EXPECT_EQ(r.spans[0], (ExpressionSpan{SpanRole::kAttribute, 0, 10}));
  EXPECT_EQ(r.spans[1], (ExpressionSpan{SpanRole::kCategory, 11, 18}));
  EXPECT_EQ(r.spans[2], (ExpressionSpan{SpanRole::kRelation, 19, 38}));
}

TEST(ExprgenTest, InvalidCombinations) {
  const Taxonomy t = RefSegRsTaxonomy();
  auto code = [&](const std::string& c, std::optional<std::string> a,
                  std::optional<std::string> r) {
    try {
      Render(t, c, a, r);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code("road", "light-duty", std::nullopt), ErrorCode::kInvalidCombination);
  EXPECT_EQ(code("tree", std::nullopt, "along with tree"), ErrorCode::kInvalidCombination);
  EXPECT_EQ(code("parking area", std::nullopt, std::nullopt),
            ErrorCode::kInvalidCombination);
  EXPECT_EQ(code("spaceship", std::nullopt, std::nullopt), ErrorCode::kInvalidCombination);
  EXPECT_EQ(ParseCode("light-duty road", t), ErrorCode::kInvalidCombination);
}

TEST(ExprgenTest, ParseErrors) {
  const Taxonomy t = RefSegRsTaxonomy();
  EXPECT_EQ(ParseCode("a purple elephant", t), ErrorCode::kUnrecognizedCategory);
  EXPECT_EQ(ParseCode("", t), ErrorCode::kUnrecognizedCategory);
  EXPECT_EQ(ParseCode("car parked near the lake", t), ErrorCode::kUnrecognizedPhrase);
}

TEST(ExprgenTest, AmbiguousParse) {
  Taxonomy t = RefSegRsTaxonomy();
  ReferableCategory extra;
  extra.name = "light-duty vehicle";
  extra.kind = CategoryKind::kIdentity;
  extra.member_ids = {11};
  t.categories.push_back(extra);
  EXPECT_EQ(ParseCode("light-duty vehicle", t), ErrorCode::kAmbiguousParse);
}

TEST(WordCloudTest, MatchesTokenCountingOracle) {
  const Taxonomy t = RefSegRsTaxonomy();
  std::vector<std::string> texts;
  for (const Expression& e : EnumerateExpressions(t)) texts.push_back(e.text);
  const std::set<std::string> stop = {"a",    "an",         "the",     "in",
                                      "on",   "with",       "by",      "along",
                                      "driving", "surrounded"};
  std::map<std::string, int> oracle;
  for (const std::string& text : texts) {
    std::istringstream in(text);
    std::string w;
    while (in >> w) {
      if (!stop.count(w)) ++oracle[w];
    }
  }
  const auto counts = WordCloudCounts(texts);
  ASSERT_EQ(counts.size(), oracle.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    EXPECT_EQ(counts[i].second, oracle[counts[i].first]) << counts[i].first;
    if (i > 0) {
      const auto& p = counts[i - 1];
      EXPECT_TRUE(p.second > counts[i].second ||
                  (p.second == counts[i].second && p.first < counts[i].first));
    }
  }
}

TEST(WordCloudTest, StopTokens) {
  EXPECT_TRUE(IsStopToken("the"));
  EXPECT_TRUE(IsStopToken("along"));
  EXPECT_FALSE(IsStopToken("road"));
  EXPECT_EQ(WordCloudCounts({"the car", "a car in the road"}),
            (std::vector<std::pair<std::string, int>>{{"car", 2}, {"road", 1}}));
}

}  // namespace
}  // namespace refseg
