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

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace refseg {

namespace {

using nlohmann::json;

constexpr std::string_view kAdjacencyConnectives[] = {"with", "along",
                                                      "along with"};
constexpr std::string_view kContainmentConnectives[] = {
    "surrounded by", "in", "on", "driving on"};

template <typename T>
const T* FindByName(const std::vector<T>& items, std::string_view name) {
  for (const T& item : items) {
    if (item.name == name) return &item;
  }
  return nullptr;
}

std::vector<ClassId> SortedUnique(std::vector<ClassId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::string_view KindName(CategoryKind kind) {
  return kind == CategoryKind::kIdentity ? "identity" : "inclusion";
}

std::string_view KindName(RelationKind kind) {
  return kind == RelationKind::kAdjacency ? "adjacency" : "containment";
}

[[noreturn]] void ThrowParse(const std::string& message) {
  throw Error(ErrorCode::kParseError, message);
}

const json& Field(const json& object, const char* key,
                  const std::string& context) {
  if (!object.is_object() || !object.contains(key)) {
    ThrowParse(context + ": missing field '" + key + "'");
  }
  return object.at(key);
}

std::string StringField(const json& object, const char* key,
                        const std::string& context) {
  const json& value = Field(object, key, context);
  if (!value.is_string()) ThrowParse(context + ": '" + key + "' must be a string");
  return value.get<std::string>();
}

std::vector<ClassId> IdList(const json& object, const char* key,
                            const std::string& context) {
  const json& value = Field(object, key, context);
  if (!value.is_array()) ThrowParse(context + ": '" + key + "' must be an array");
  std::vector<ClassId> ids;
  for (const json& id : value) {
    if (!id.is_number_integer() || id.get<int>() < 0 || id.get<int>() > 255) {
      ThrowParse(context + ": class ids must be integers in [0, 255]");
    }
    ids.push_back(static_cast<ClassId>(id.get<int>()));
  }
  return ids;
}

const json& Section(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_array()) {
    ThrowParse(std::string("top-level section '") + key +
               "' missing or not an array");
  }
  return doc.at(key);
}

}  // namespace

std::string_view RelationRule::ReferencePhrase() const {
  if (name.size() > connective.size() + 1 &&
      name.compare(0, connective.size(), connective) == 0 &&
      name[connective.size()] == ' ') {
    return std::string_view(name).substr(connective.size() + 1);
  }
  return {};
}

ContainmentStrength RelationRule::Strength() const {
  return connective == "surrounded by" ? ContainmentStrength::kSurrounded
                                       : ContainmentStrength::kOn;
}

bool RelationRule::AppliesTo(std::string_view subject_category) const {
  if (subject_category == reference_category) return false;
  if (subjects.empty()) return true;
  return std::find(subjects.begin(), subjects.end(), subject_category) !=
         subjects.end();
}

const TaxonomyClass* Taxonomy::FindClass(ClassId id) const {
  for (const TaxonomyClass& c : classes) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const ReferableCategory* Taxonomy::FindCategory(std::string_view name) const {
  return FindByName(categories, name);
}

const AttributeRule* Taxonomy::FindAttribute(std::string_view name) const {
  return FindByName(attributes, name);
}

const RelationRule* Taxonomy::FindRelation(std::string_view name) const {
  return FindByName(relations, name);
}

ClassIdSet Taxonomy::ClassIds() const {
  ClassIdSet ids;
  for (const TaxonomyClass& c : classes) ids.set(c.id);
  return ids;
}

std::vector<const ReferableCategory*> Taxonomy::ReferableCategories() const {
  std::vector<const ReferableCategory*> out;
  for (const ReferableCategory& c : categories) {
    if (c.referable) out.push_back(&c);
  }
  return out;
}

std::vector<const AttributeRule*> Taxonomy::AttributesOf(
    std::string_view category) const {
  std::vector<const AttributeRule*> out;
  for (const AttributeRule& a : attributes) {
    if (a.category == category) out.push_back(&a);
  }
  return out;
}

std::vector<const RelationRule*> Taxonomy::RelationsFor(
    std::string_view category) const {
  std::vector<const RelationRule*> out;
  for (const RelationRule& r : relations) {
    if (r.AppliesTo(category)) out.push_back(&r);
  }
  return out;
}

bool IsAdjacencyConnective(std::string_view connective) {
  return std::find(std::begin(kAdjacencyConnectives),
                   std::end(kAdjacencyConnectives),
                   connective) != std::end(kAdjacencyConnectives);
}

bool IsContainmentConnective(std::string_view connective) {
  return std::find(std::begin(kContainmentConnectives),
                   std::end(kContainmentConnectives),
                   connective) != std::end(kContainmentConnectives);
}

std::vector<Violation> ValidateTaxonomy(const Taxonomy& taxonomy) {
  std::vector<Violation> out;
  auto add = [&out](ErrorCode code, const std::string& entry,
                    const std::string& rule) {
    out.push_back({code, entry, rule});
  };

  std::set<int> ids;
  std::set<std::string> class_names;
  for (const TaxonomyClass& c : taxonomy.classes) {
    if (!ids.insert(c.id).second) {
      add(ErrorCode::kInvalidTaxonomy, "class " + std::to_string(c.id),
          "duplicate class id");
    }
    if (!class_names.insert(c.name).second) {
      add(ErrorCode::kInvalidTaxonomy, "class " + c.name, "duplicate class name");
    }
  }

  std::set<std::string> names;
  for (const ReferableCategory& c : taxonomy.categories) {
    const std::string entry = "category " + c.name;
    if (!names.insert(c.name).second) {
      add(ErrorCode::kInvalidTaxonomy, entry, "duplicate category name");
    }
    if (c.member_ids.empty()) {
      add(ErrorCode::kEmptyCategory, entry, "member set is empty");
    }
    for (ClassId id : c.member_ids) {
      if (!ids.count(id)) {
        add(ErrorCode::kDanglingClassId, entry,
            "member id " + std::to_string(id) + " is not a declared class");
      }
    }
    if (c.kind == CategoryKind::kIdentity && c.member_ids.size() > 1) {
      add(ErrorCode::kInvalidTaxonomy, entry,
          "identity category must have exactly one member");
    }
  }

  names.clear();
  for (const AttributeRule& a : taxonomy.attributes) {
    const std::string entry = "attribute " + a.name;
    if (!names.insert(a.name).second) {
      add(ErrorCode::kInvalidTaxonomy, entry, "duplicate attribute name");
    }
    if (a.refined_ids.empty()) {
      add(ErrorCode::kEmptyCategory, entry, "refined id set is empty");
    }
    const ReferableCategory* category = taxonomy.FindCategory(a.category);
    if (category == nullptr) {
      add(ErrorCode::kUnknownCategory, entry,
          "targets unknown category '" + a.category + "'");
      continue;
    }
    for (ClassId id : a.refined_ids) {
      if (!std::binary_search(category->member_ids.begin(),
                              category->member_ids.end(), id)) {
        add(ErrorCode::kInvalidTaxonomy, entry,
            "refined id " + std::to_string(id) +
                " is not a member of category '" + a.category + "'");
      }
    }
  }

  names.clear();
  for (const RelationRule& r : taxonomy.relations) {
    const std::string entry = "relation " + r.name;
    if (!names.insert(r.name).second) {
      add(ErrorCode::kInvalidTaxonomy, entry, "duplicate relation name");
    }
    if (taxonomy.FindCategory(r.reference_category) == nullptr) {
      add(ErrorCode::kUnknownCategory, entry,
          "reference category '" + r.reference_category + "' does not exist");
    }
    const bool consistent = r.kind == RelationKind::kAdjacency
                                ? IsAdjacencyConnective(r.connective)
                                : IsContainmentConnective(r.connective);
    if (!consistent) {
      add(ErrorCode::kConnectiveKindMismatch, entry,
          "connective '" + r.connective + "' is not a " +
              std::string(KindName(r.kind)) + " connective");
    }
    if (r.ReferencePhrase().empty()) {
      add(ErrorCode::kInvalidTaxonomy, entry,
          "name must start with the connective followed by a phrase");
    }
    for (const std::string& s : r.subjects) {
      const ReferableCategory* subject = taxonomy.FindCategory(s);
      if (subject == nullptr) {
        add(ErrorCode::kUnknownCategory, entry,
            "subject category '" + s + "' does not exist");
      } else if (!subject->referable) {
        add(ErrorCode::kInvalidTaxonomy, entry,
            "subject category '" + s + "' is reference-only");
      }
    }
  }
  return out;
}

Taxonomy ParseTaxonomy(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    ThrowParse(e.what());
  }
  if (!doc.is_object()) ThrowParse("taxonomy document must be an object");

  Taxonomy taxonomy;
  for (const json& c : Section(doc, "classes")) {
    const json& id = Field(c, "id", "class");
    if (!id.is_number_integer() || id.get<int>() < 0 || id.get<int>() > 255) {
      ThrowParse("class id must be an integer in [0, 255]");
    }
    taxonomy.classes.push_back(
        {static_cast<ClassId>(id.get<int>()), StringField(c, "name", "class")});
  }
  for (const json& c : Section(doc, "categories")) {
    ReferableCategory category;
    category.name = StringField(c, "name", "category");
    const std::string context = "category " + category.name;
    category.member_ids = SortedUnique(IdList(c, "member_ids", context));
    const std::string kind = StringField(c, "kind", context);
    if (kind == "identity") {
      category.kind = CategoryKind::kIdentity;
    } else if (kind == "inclusion") {
      category.kind = CategoryKind::kInclusion;
    } else {
      ThrowParse(context + ": kind must be identity or inclusion");
    }
    if (c.contains("referable")) {
      if (!c.at("referable").is_boolean()) {
        ThrowParse(context + ": referable must be a boolean");
      }
      category.referable = c.at("referable").get<bool>();
    }
    taxonomy.categories.push_back(std::move(category));
  }
  for (const json& a : Section(doc, "attributes")) {
    AttributeRule attribute;
    attribute.name = StringField(a, "name", "attribute");
    const std::string context = "attribute " + attribute.name;
    attribute.category = StringField(a, "category", context);
    attribute.refined_ids = SortedUnique(IdList(a, "refined_ids", context));
    taxonomy.attributes.push_back(std::move(attribute));
  }
  for (const json& r : Section(doc, "relations")) {
    RelationRule relation;
    relation.name = StringField(r, "name", "relation");
    const std::string context = "relation " + relation.name;
    const std::string kind = StringField(r, "kind", context);
    if (kind == "adjacency") {
      relation.kind = RelationKind::kAdjacency;
    } else if (kind == "containment") {
      relation.kind = RelationKind::kContainment;
    } else {
      ThrowParse(context + ": kind must be adjacency or containment");
    }
    relation.reference_category =
        StringField(r, "reference_category", context);
    relation.connective = StringField(r, "connective", context);
    if (r.contains("subjects")) {
      const json& subjects = r.at("subjects");
      if (!subjects.is_array()) ThrowParse(context + ": subjects must be an array");
      for (const json& s : subjects) {
        if (!s.is_string()) ThrowParse(context + ": subjects must be strings");
        relation.subjects.push_back(s.get<std::string>());
      }
    }
    taxonomy.relations.push_back(std::move(relation));
  }

  const std::vector<Violation> violations = ValidateTaxonomy(taxonomy);
  if (!violations.empty()) {
    const Violation& v = violations.front();
    throw Error(v.code, v.entry + ": " + v.rule);
  }
  return taxonomy;
}

Taxonomy LoadTaxonomy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open taxonomy '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return ParseTaxonomy(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::string SerializeTaxonomy(const Taxonomy& taxonomy) {
  auto by_name = [](const auto* a, const auto* b) { return a->name < b->name; };
  auto sorted = [&](const auto& items) {
    std::vector<const typename std::decay_t<decltype(items)>::value_type*> out;
    for (const auto& item : items) out.push_back(&item);
    std::stable_sort(out.begin(), out.end(), by_name);
    return out;
  };

  json doc = json::object();
  json classes = json::array();
  for (const TaxonomyClass* c : sorted(taxonomy.classes)) {
    classes.push_back({{"id", c->id}, {"name", c->name}});
  }
  json categories = json::array();
  for (const ReferableCategory* c : sorted(taxonomy.categories)) {
    categories.push_back({{"name", c->name},
                          {"kind", KindName(c->kind)},
                          {"member_ids", SortedUnique(c->member_ids)},
                          {"referable", c->referable}});
  }
  json attributes = json::array();
  for (const AttributeRule* a : sorted(taxonomy.attributes)) {
    attributes.push_back({{"name", a->name},
                          {"category", a->category},
                          {"refined_ids", SortedUnique(a->refined_ids)}});
  }
  json relations = json::array();
  for (const RelationRule* r : sorted(taxonomy.relations)) {
    std::vector<std::string> subjects = r->subjects;
    std::sort(subjects.begin(), subjects.end());
    relations.push_back({{"name", r->name},
                         {"kind", KindName(r->kind)},
                         {"reference_category", r->reference_category},
                         {"connective", r->connective},
                         {"subjects", subjects}});
  }
  doc["classes"] = std::move(classes);
  doc["categories"] = std::move(categories);
  doc["attributes"] = std::move(attributes);
  doc["relations"] = std::move(relations);
  return doc.dump(2) + "\n";
}

std::uint64_t TaxonomyHash(const Taxonomy& taxonomy) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char ch : SerializeTaxonomy(taxonomy)) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::vector<ClassId> ResolveCategory(const Taxonomy& taxonomy,
                                     std::string_view category,
                                     const std::optional<std::string>& attribute) {
  const ReferableCategory* c = taxonomy.FindCategory(category);
  if (c == nullptr) {
    throw Error(ErrorCode::kUnknownCategory,
                "unknown category '" + std::string(category) + "'");
  }
  if (!attribute) return c->member_ids;
  const AttributeRule* a = taxonomy.FindAttribute(*attribute);
  if (a == nullptr) {
    throw Error(ErrorCode::kUnknownAttribute,
                "unknown attribute '" + *attribute + "'");
  }
  if (a->category != c->name) {
    throw Error(ErrorCode::kAttributeCategoryMismatch,
                "attribute '" + a->name + "' targets '" + a->category +
                    "', not '" + c->name + "'");
  }
  return a->refined_ids;
}

Taxonomy RefSegRsTaxonomy() {
  Taxonomy t;
  // SkyScapes label classes, ids in the dataset's listing order.
  const char* class_names[] = {
      "low vegetation",   "paved road",           "non-paved road",
      "paved parking place", "non-paved parking place", "bikeway",
      "sidewalk",         "entrance/exit",        "danger area",
      "lane marking",     "building",             "car",
      "trailer",          "van",                  "truck",
      "large truck",      "bus",                  "clutter",
      "impervious surface", "tree"};
  for (int id = 0; id < 20; ++id) {
    t.classes.push_back({static_cast<ClassId>(id), class_names[id]});
  }

  auto identity = [&t](const char* name, ClassId id) {
    t.categories.push_back({name, {id}, CategoryKind::kIdentity, true});
  };
  auto inclusion = [&t](const char* name, std::vector<ClassId> ids,
                        bool referable = true) {
    t.categories.push_back(
        {name, SortedUnique(std::move(ids)), CategoryKind::kInclusion, referable});
  };
  inclusion("road", {1, 2});
  inclusion("vehicle", {11, 12, 13, 14, 15, 16});
  identity("car", 11);
  identity("van", 13);
  identity("building", 10);
  identity("truck", 14);
  identity("trailer", 12);
  identity("bus", 16);
  identity("road marking", 9);
  identity("bikeway", 5);
  identity("sidewalk", 6);
  identity("tree", 19);
  identity("low vegetation", 0);
  identity("impervious surface", 18);
  inclusion("parking area", {3, 4}, /*referable=*/false);

  t.attributes = {
      {"paved", "road", {1}},
      {"unpaved", "road", {2}},
      {"light-duty", "vehicle", {11, 13}},
      {"heavy-duty", "vehicle", {14, 15, 16}},
      {"long", "vehicle", {15, 16}},
  };

  const std::vector<std::string> vehicles = {"vehicle", "car",     "van",
                                             "truck",   "trailer", "bus"};
  t.relations = {
      {"in the parking area", RelationKind::kContainment, "parking area", "in",
       vehicles},
      {"with a parking lot", RelationKind::kAdjacency, "parking area", "with",
       {"building"}},
      {"driving on the road", RelationKind::kContainment, "road", "driving on",
       vehicles},
      {"along the road", RelationKind::kAdjacency, "road", "along",
       {"building", "tree", "sidewalk", "bikeway", "low vegetation"}},
      {"along with tree", RelationKind::kAdjacency, "tree", "along with",
       {"road", "sidewalk", "bikeway", "building"}},
      {"on the road", RelationKind::kContainment, "road", "on",
       {"road marking", "vehicle", "car"}},
      {"surrounded by building", RelationKind::kContainment, "building",
       "surrounded by", {"low vegetation", "tree", "impervious surface"}},
  };
  return t;
}

}  // namespace refseg
