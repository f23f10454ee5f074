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

#ifndef REFSEG_EXPRGEN_H_
#define REFSEG_EXPRGEN_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "refseg/taxonomy.h"

namespace refseg {

enum class SpanRole { kCategory, kAttribute, kRelation };

std::string_view SpanRoleName(SpanRole role);

// Half-open character range [start, end) of one role inside the text.
struct ExpressionSpan {
  SpanRole role = SpanRole::kCategory;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const ExpressionSpan&) const = default;
};

// A referring expression built from the three-slot template
// "<attribute?> <category> <relation?>".
struct Expression {
  std::string category;
  std::optional<std::string> attribute;
  std::optional<std::string> relation;
  std::string text;

  // Structural equality ignores `text`, which is derived.
  bool SameStructure(const Expression& other) const {
    return category == other.category && attribute == other.attribute &&
           relation == other.relation;
  }
  bool operator==(const Expression&) const = default;
};

struct RenderedExpression {
  std::string text;
  std::vector<ExpressionSpan> spans;  // in text order
};

// Throws InvalidCombination when the fields do not fit the taxonomy.
RenderedExpression Render(const Taxonomy& taxonomy, const std::string& category,
                          const std::optional<std::string>& attribute,
                          const std::optional<std::string>& relation);

// Builds an Expression whose text is the canonical rendering.
Expression MakeExpression(const Taxonomy& taxonomy, const std::string& category,
                          const std::optional<std::string>& attribute = std::nullopt,
                          const std::optional<std::string>& relation = std::nullopt);

// Every template instantiation the taxonomy permits, grouped by category in
// document order; within a category: bare, then each attribute, and each of
// those followed by every applicable relation.
std::vector<Expression> EnumerateExpressions(const Taxonomy& taxonomy);

// Inverse of Render. Input is lower-cased and whitespace-collapsed first.
Expression Parse(const std::string& text, const Taxonomy& taxonomy);

// Token frequencies for a word cloud: whitespace tokens, connectives and
// articles dropped, sorted by descending count then token.
std::vector<std::pair<std::string, int>> WordCloudCounts(
    const std::vector<std::string>& expressions);

bool IsStopToken(std::string_view token);

}  // namespace refseg

#endif  // REFSEG_EXPRGEN_H_
