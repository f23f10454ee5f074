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

#ifndef REFSEG_TAXONOMY_H_
#define REFSEG_TAXONOMY_H_

#include <bitset>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refseg/error.h"

namespace refseg {

using ClassId = std::uint8_t;
using ClassIdSet = std::bitset<256>;

struct TaxonomyClass {
  ClassId id = 0;
  std::string name;
};

// identity: one label class renamed to a more idiomatic word ("road marking"
// for "lane marking"). inclusion: the union of several label classes
// ("vehicle" for car, van, truck, ...).
enum class CategoryKind { kIdentity, kInclusion };

struct ReferableCategory {
  std::string name;
  std::vector<ClassId> member_ids;  // sorted, unique
  CategoryKind kind = CategoryKind::kIdentity;
  // Reference-only categories ("parking area") can be the object of a
  // relation but are never the subject of an expression.
  bool referable = true;
};

struct AttributeRule {
  std::string name;
  std::string category;
  std::vector<ClassId> refined_ids;  // sorted, unique
};

enum class RelationKind { kAdjacency, kContainment };

// Containment strength selects the threshold a containment relation uses.
enum class ContainmentStrength { kOn, kSurrounded };

struct RelationRule {
  // Full surface phrase, e.g. "in the parking area". Always begins with the
  // connective followed by a single space.
  std::string name;
  RelationKind kind = RelationKind::kAdjacency;
  std::string reference_category;
  std::string connective;
  // Subject categories this relation may be attached to; empty means any
  // referable category other than the reference.
  std::vector<std::string> subjects;

  // The phrase after the connective ("the parking area").
  std::string_view ReferencePhrase() const;
  ContainmentStrength Strength() const;
  bool AppliesTo(std::string_view subject_category) const;
};

struct Taxonomy {
  std::vector<TaxonomyClass> classes;
  std::vector<ReferableCategory> categories;
  std::vector<AttributeRule> attributes;
  std::vector<RelationRule> relations;

  const TaxonomyClass* FindClass(ClassId id) const;
  const ReferableCategory* FindCategory(std::string_view name) const;
  const AttributeRule* FindAttribute(std::string_view name) const;
  const RelationRule* FindRelation(std::string_view name) const;

  ClassIdSet ClassIds() const;
  // Categories that may appear as expression subjects, in document order.
  std::vector<const ReferableCategory*> ReferableCategories() const;
  std::vector<const AttributeRule*> AttributesOf(std::string_view category) const;
  std::vector<const RelationRule*> RelationsFor(std::string_view category) const;
};

struct Violation {
  ErrorCode code;
  std::string entry;
  std::string rule;
};

bool IsAdjacencyConnective(std::string_view connective);
bool IsContainmentConnective(std::string_view connective);

// Returns every broken invariant; an empty list means the taxonomy is valid.
std::vector<Violation> ValidateTaxonomy(const Taxonomy& taxonomy);

// Parses a taxonomy document and validates it. The first violation found is
// raised with its own error code.
Taxonomy ParseTaxonomy(std::string_view document);
Taxonomy LoadTaxonomy(const std::string& path);

// Canonical form: keys sorted, entries sorted by name, ids ascending,
// two-space indentation, trailing newline.
std::string SerializeTaxonomy(const Taxonomy& taxonomy);

// FNV-1a over the canonical serialization.
std::uint64_t TaxonomyHash(const Taxonomy& taxonomy);

// Attribute refined ids when an attribute is given, else the category members.
std::vector<ClassId> ResolveCategory(const Taxonomy& taxonomy,
                                     std::string_view category,
                                     const std::optional<std::string>& attribute);

// The taxonomy bundled with the toolkit: SkyScapes' 20 label classes and the
// 14 categories / 5 attributes / 7 spatial relations used by RefSegRS.
Taxonomy RefSegRsTaxonomy();

}  // namespace refseg

#endif  // REFSEG_TAXONOMY_H_
