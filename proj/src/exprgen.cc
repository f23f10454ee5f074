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

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace refseg {

namespace {

constexpr std::string_view kStopTokens[] = {
    "a", "an", "the", "in", "on", "with", "by", "along", "driving", "surrounded"};

std::string Normalize(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    if (!out.empty()) out += ' ';
    for (char ch : token) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
  }
  return out;
}

bool StartsWith(std::string_view text, std::string_view prefix) {
  return text.substr(0, prefix.size()) == prefix;
}

bool ContainsWord(std::string_view text, std::string_view word) {
  for (std::size_t pos = text.find(word); pos != std::string_view::npos;
       pos = text.find(word, pos + 1)) {
    const bool left = pos == 0 || text[pos - 1] == ' ';
    const std::size_t end = pos + word.size();
    const bool right = end == text.size() || text[end] == ' ';
    if (left && right) return true;
  }
  return false;
}

std::string Describe(const Expression& e) {
  std::string out = "(" + e.category + ", " + e.attribute.value_or("-") + ", " +
                    e.relation.value_or("-") + ")";
  return out;
}

// Returns an empty string when the combination is valid, else the reason.
std::string CombinationProblem(const Taxonomy& taxonomy,
                               const std::string& category,
                               const std::optional<std::string>& attribute,
                               const std::optional<std::string>& relation) {
  const ReferableCategory* c = taxonomy.FindCategory(category);
  if (c == nullptr) return "unknown category '" + category + "'";
  if (!c->referable) return "category '" + category + "' is reference-only";
  if (attribute) {
    const AttributeRule* a = taxonomy.FindAttribute(*attribute);
    if (a == nullptr) return "unknown attribute '" + *attribute + "'";
    if (a->category != category) {
      return "attribute '" + *attribute + "' does not describe '" + category + "'";
    }
  }
  if (relation) {
    const RelationRule* r = taxonomy.FindRelation(*relation);
    if (r == nullptr) return "unknown relation '" + *relation + "'";
    if (!r->AppliesTo(category)) {
      return "relation '" + *relation + "' does not apply to '" + category + "'";
    }
  }
  return {};
}

}  // namespace

std::string_view SpanRoleName(SpanRole role) {
  switch (role) {
    case SpanRole::kCategory: return "category";
    case SpanRole::kAttribute: return "attribute";
    case SpanRole::kRelation: return "relation";
  }
  return "category";
}

RenderedExpression Render(const Taxonomy& taxonomy, const std::string& category,
                          const std::optional<std::string>& attribute,
                          const std::optional<std::string>& relation) {
  const std::string problem =
      CombinationProblem(taxonomy, category, attribute, relation);
  if (!problem.empty()) throw Error(ErrorCode::kInvalidCombination, problem);

  RenderedExpression out;
  auto append = [&out](SpanRole role, const std::string& words) {
    if (!out.text.empty()) out.text += ' ';
    const std::size_t start = out.text.size();
    out.text += words;
    out.spans.push_back({role, start, out.text.size()});
  };
  if (attribute) append(SpanRole::kAttribute, *attribute);
  append(SpanRole::kCategory, category);
  if (relation) append(SpanRole::kRelation, *relation);
  return out;
}

Expression MakeExpression(const Taxonomy& taxonomy, const std::string& category,
                          const std::optional<std::string>& attribute,
                          const std::optional<std::string>& relation) {
  Expression e{category, attribute, relation, {}};
  e.text = Render(taxonomy, category, attribute, relation).text;
  return e;
}

std::vector<Expression> EnumerateExpressions(const Taxonomy& taxonomy) {
  std::vector<Expression> out;
  for (const ReferableCategory* c : taxonomy.ReferableCategories()) {
    std::vector<std::optional<std::string>> attributes = {std::nullopt};
    for (const AttributeRule* a : taxonomy.AttributesOf(c->name)) {
      attributes.push_back(a->name);
    }
    std::vector<std::optional<std::string>> relations = {std::nullopt};
    for (const RelationRule* r : taxonomy.RelationsFor(c->name)) {
      relations.push_back(r->name);
    }
    for (const auto& attribute : attributes) {
      for (const auto& relation : relations) {
        out.push_back(MakeExpression(taxonomy, c->name, attribute, relation));
      }
    }
  }
  return out;
}

Expression Parse(const std::string& raw_text, const Taxonomy& taxonomy) {
  const std::string text = Normalize(raw_text);
  const std::string_view view(text);

  std::vector<std::optional<std::string>> attributes = {std::nullopt};
  for (const AttributeRule& a : taxonomy.attributes) attributes.push_back(a.name);

  std::vector<Expression> lexical;
  for (const auto& attribute : attributes) {
    std::string_view rest = view;
    if (attribute) {
      if (!StartsWith(rest, *attribute + " ")) continue;
      rest.remove_prefix(attribute->size() + 1);
    }
    for (const ReferableCategory* c : taxonomy.ReferableCategories()) {
      if (rest == c->name) {
        lexical.push_back({c->name, attribute, std::nullopt, {}});
        continue;
      }
      if (!StartsWith(rest, c->name + " ")) continue;
      const std::string_view tail = rest.substr(c->name.size() + 1);
      for (const RelationRule& r : taxonomy.relations) {
        if (tail == r.name) lexical.push_back({c->name, attribute, r.name, {}});
      }
    }
  }

  std::vector<Expression> valid;
  std::string first_problem;
  for (Expression& e : lexical) {
    const std::string problem =
        CombinationProblem(taxonomy, e.category, e.attribute, e.relation);
    if (problem.empty()) {
      e.text = text;
      valid.push_back(std::move(e));
    } else if (first_problem.empty()) {
      first_problem = problem;
    }
  }

  if (valid.size() > 1) {
    throw Error(ErrorCode::kAmbiguousParse, "'" + text + "' parses as both " +
                                                Describe(valid[0]) + " and " +
                                                Describe(valid[1]));
  }
  if (valid.size() == 1) return valid.front();
  if (!first_problem.empty()) {
    throw Error(ErrorCode::kInvalidCombination, "'" + text + "': " + first_problem);
  }
  for (const ReferableCategory* c : taxonomy.ReferableCategories()) {
    if (ContainsWord(view, c->name)) {
      throw Error(ErrorCode::kUnrecognizedPhrase,
                  "'" + text + "' names category '" + c->name +
                      "' but the remaining words match no attribute or relation");
    }
  }
  throw Error(ErrorCode::kUnrecognizedCategory,
              "'" + text + "' contains no known category");
}

bool IsStopToken(std::string_view token) {
  return std::find(std::begin(kStopTokens), std::end(kStopTokens), token) !=
         std::end(kStopTokens);
}

std::vector<std::pair<std::string, int>> WordCloudCounts(
    const std::vector<std::string>& expressions) {
  std::map<std::string, int> counts;
  for (const std::string& e : expressions) {
    std::istringstream in(e);
    std::string token;
    while (in >> token) {
      if (!IsStopToken(token)) ++counts[token];
    }
  }
  std::vector<std::pair<std::string, int>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  return out;
}

}  // namespace refseg
