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

#ifndef REFSEG_TESTS_MASKGEN_ORACLE_H_
#define REFSEG_TESTS_MASKGEN_ORACLE_H_

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.h"
#include "refseg/exprgen.h"
#include "refseg/maskgen.h"
#include "refseg/taxonomy.h"

namespace refseg::testing {

// Everything the oracle needs, read from the serialized taxonomy rather than
// through the library's lookup helpers.
struct DocTaxonomy {
  std::vector<ClassId> class_ids;
  std::map<std::string, std::vector<ClassId>> members;
  std::map<std::string, std::vector<ClassId>> refined;  // attribute -> ids
  std::map<std::string, nlohmann::json> relations;
};

inline DocTaxonomy ReadDoc(const Taxonomy& t) {
  const nlohmann::json doc = nlohmann::json::parse(SerializeTaxonomy(t));
  DocTaxonomy d;
  for (const nlohmann::json& c : doc["classes"]) d.class_ids.push_back(c["id"].get<int>());
  for (const nlohmann::json& c : doc["categories"]) {
    d.members[c["name"]] = c["member_ids"].get<std::vector<ClassId>>();
  }
  for (const nlohmann::json& a : doc["attributes"]) {
    d.refined[a["name"]] = a["refined_ids"].get<std::vector<ClassId>>();
  }
  for (const nlohmann::json& r : doc["relations"]) d.relations[r["name"]] = r;
  return d;
}

inline std::vector<std::uint8_t> OracleClassMask(const LabelMap& map,
                                          const std::vector<ClassId>& ids) {
  std::vector<std::uint8_t> m(map.pixels.size(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = std::find(ids.begin(), ids.end(), map.pixels[i]) != ids.end();
  }
  return m;
}

struct Coverage {
  int holds = 0;
  int fails = 0;
};

// Expected mask for one expression computed by flood fill and window scans.
inline std::vector<std::uint8_t> OracleMask(const LabelMap& map, const DocTaxonomy& d,
                                     const Expression& e,
                                     const SpatialPredicateConfig& cfg,
                                     std::map<std::string, Coverage>* coverage) {
  const std::vector<ClassId>& ids =
      e.attribute ? d.refined.at(*e.attribute) : d.members.at(e.category);
  std::vector<std::uint8_t> subject = OracleClassMask(map, ids);
  if (!e.relation) return subject;
  const nlohmann::json& rel = d.relations.at(*e.relation);
  const auto reference =
      OracleClassMask(map, d.members.at(rel["reference_category"].get<std::string>()));
  int count = 0;
  const auto label =
      FloodFillLabels(subject, map.width, map.height, cfg.connectivity, &count);
  const auto rings =
      RingsOracle(label, count, map.width, map.height, cfg.buffer_radius);
  std::vector<bool> keep(count, false);
  for (int id = 0; id < count; ++id) {
    int on = 0;
    for (int q : rings[id]) on += reference[q];
    const int ring = static_cast<int>(rings[id].size());
    bool holds;
    if (rel["kind"] == "adjacency") {
      holds = on > 0;
    } else {
      const double tau =
          rel["connective"] == "surrounded by" ? cfg.tau_surround : cfg.tau_on;
      holds = ring > 0 && static_cast<double>(on) / ring >= tau;
    }
    keep[id] = holds;
    Coverage& c = (*coverage)[*e.relation];
    (holds ? c.holds : c.fails)++;
  }
  std::vector<std::uint8_t> out(subject.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = label[i] >= 0 && keep[label[i]];
  return out;
}

}  // namespace refseg::testing

#endif  // REFSEG_TESTS_MASKGEN_ORACLE_H_
