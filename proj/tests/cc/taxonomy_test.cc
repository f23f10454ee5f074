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

#include "refseg/taxonomy.h"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"

#ifndef REFSEG_SOURCE_DIR
#error "REFSEG_SOURCE_DIR must be defined"
#endif

namespace refseg {
namespace {

using nlohmann::json;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json BundledDocument() { return json::parse(SerializeTaxonomy(RefSegRsTaxonomy())); }

ErrorCode ParseCode(const json& doc) {
  try {
    ParseTaxonomy(doc.dump());
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "document parsed without error";
  return ErrorCode::kInvalidArgument;
}

json& FindByName(json& array, const std::string& name) {
  for (json& e : array) {
    if (e["name"] == name) return e;
  }
  throw std::runtime_error("no entry " + name);
}

TEST(RefSegRsTaxonomyTest, Inventory) {
  const Taxonomy t = RefSegRsTaxonomy();
  EXPECT_EQ(t.classes.size(), 20u);
  EXPECT_EQ(t.ReferableCategories().size(), 14u);
  EXPECT_EQ(t.attributes.size(), 5u);
  EXPECT_EQ(t.relations.size(), 7u);
  EXPECT_TRUE(ValidateTaxonomy(t).empty());
  const ReferableCategory* parking = t.FindCategory("parking area");
  ASSERT_NE(parking, nullptr);
  EXPECT_FALSE(parking->referable);
}

TEST(RefSegRsTaxonomyTest, IdentityAndInclusion) {
  const Taxonomy t = RefSegRsTaxonomy();
  const ReferableCategory* vehicle = t.FindCategory("vehicle");
  ASSERT_NE(vehicle, nullptr);
  EXPECT_EQ(vehicle->kind, CategoryKind::kInclusion);
  EXPECT_EQ(vehicle->member_ids, (std::vector<ClassId>{11, 12, 13, 14, 15, 16}));
  const ReferableCategory* marking = t.FindCategory("road marking");
  ASSERT_NE(marking, nullptr);
  EXPECT_EQ(marking->kind, CategoryKind::kIdentity);
  EXPECT_EQ(marking->member_ids, (std::vector<ClassId>{9}));
  EXPECT_EQ(t.FindClass(9)->name, "lane marking");
}

TEST(RefSegRsTaxonomyTest, BundledFileIsCanonical) {
  const std::string path = std::string(REFSEG_SOURCE_DIR) + "/data/refsegrs_taxonomy.json";
  const std::string bytes = ReadFile(path);
  ASSERT_FALSE(bytes.empty());
  EXPECT_EQ(bytes, SerializeTaxonomy(RefSegRsTaxonomy()));
  EXPECT_EQ(SerializeTaxonomy(LoadTaxonomy(path)), bytes);
  EXPECT_EQ(TaxonomyHash(LoadTaxonomy(path)), TaxonomyHash(RefSegRsTaxonomy()));
}

TEST(TaxonomyParseTest, RoundTripIsStable) {
  const std::string once = SerializeTaxonomy(RefSegRsTaxonomy());
  EXPECT_EQ(SerializeTaxonomy(ParseTaxonomy(once)), once);
}

TEST(TaxonomyParseTest, EntryOrderDoesNotChangeHash) {
  json doc = BundledDocument();
  std::reverse(doc["categories"].begin(), doc["categories"].end());
  std::reverse(doc["relations"].begin(), doc["relations"].end());
  EXPECT_EQ(TaxonomyHash(ParseTaxonomy(doc.dump())), TaxonomyHash(RefSegRsTaxonomy()));
}

TEST(TaxonomyParseTest, DanglingClassId) {
  json doc = BundledDocument();
  FindByName(doc["categories"], "car")["member_ids"] = {11, 42};
  EXPECT_EQ(ParseCode(doc), ErrorCode::kDanglingClassId);
}

TEST(TaxonomyParseTest, EmptyCategory) {
  json doc = BundledDocument();
  FindByName(doc["categories"], "bus")["member_ids"] = json::array();
  EXPECT_EQ(ParseCode(doc), ErrorCode::kEmptyCategory);
}

TEST(TaxonomyParseTest, ConnectiveKindMismatch) {
  json doc = BundledDocument();
  FindByName(doc["relations"], "along the road")["kind"] = "containment";
  EXPECT_EQ(ParseCode(doc), ErrorCode::kConnectiveKindMismatch);
}

TEST(TaxonomyParseTest, UnknownReferenceCategory) {
  json doc = BundledDocument();
  FindByName(doc["relations"], "along with tree")["reference_category"] = "forest";
  EXPECT_EQ(ParseCode(doc), ErrorCode::kUnknownCategory);
}

TEST(TaxonomyParseTest, AttributeOutsideCategory) {
  json doc = BundledDocument();
  FindByName(doc["attributes"], "paved")["refined_ids"] = {1, 10};
  EXPECT_EQ(ParseCode(doc), ErrorCode::kInvalidTaxonomy);
}

TEST(TaxonomyParseTest, MalformedDocument) {
  try {
    ParseTaxonomy("{not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
  json doc = BundledDocument();
  doc.erase("classes");
  EXPECT_EQ(ParseCode(doc), ErrorCode::kParseError);
}

TEST(TaxonomyParseTest, ValidateReportsEveryViolation) {
  Taxonomy t = RefSegRsTaxonomy();
  t.categories[0].member_ids.clear();
  t.relations[0].reference_category = "nowhere";
  const auto violations = ValidateTaxonomy(t);
  EXPECT_GE(violations.size(), 2u);
}

TEST(RelationRuleTest, PhraseStrengthAndSubjects) {
  const Taxonomy t = RefSegRsTaxonomy();
  const RelationRule* in_parking = t.FindRelation("in the parking area");
  ASSERT_NE(in_parking, nullptr);
  EXPECT_EQ(in_parking->ReferencePhrase(), "the parking area");
  EXPECT_EQ(in_parking->kind, RelationKind::kContainment);
  EXPECT_EQ(in_parking->Strength(), ContainmentStrength::kOn);
  EXPECT_TRUE(in_parking->AppliesTo("car"));
  EXPECT_FALSE(in_parking->AppliesTo("building"));
  EXPECT_EQ(t.FindRelation("surrounded by building")->Strength(),
            ContainmentStrength::kSurrounded);
  EXPECT_FALSE(t.FindRelation("along with tree")->AppliesTo("tree"));
}

TEST(ResolveCategoryTest, AttributesRefineMembers) {
  const Taxonomy t = RefSegRsTaxonomy();
  EXPECT_EQ(ResolveCategory(t, "vehicle", std::nullopt),
            (std::vector<ClassId>{11, 12, 13, 14, 15, 16}));
  EXPECT_EQ(ResolveCategory(t, "vehicle", std::string("light-duty")),
            (std::vector<ClassId>{11, 13}));
  EXPECT_EQ(ResolveCategory(t, "vehicle", std::string("heavy-duty")),
            (std::vector<ClassId>{14, 15, 16}));
  EXPECT_EQ(ResolveCategory(t, "vehicle", std::string("long")),
            (std::vector<ClassId>{15, 16}));
  auto code_of = [&](const std::string& c, const std::optional<std::string>& a) {
    try {
      ResolveCategory(t, c, a);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code_of("boat", std::nullopt), ErrorCode::kUnknownCategory);
  EXPECT_EQ(code_of("vehicle", std::string("shiny")), ErrorCode::kUnknownAttribute);
  EXPECT_EQ(code_of("road", std::string("light-duty")), ErrorCode::kAttributeCategoryMismatch);
}

}  // namespace
}  // namespace refseg
