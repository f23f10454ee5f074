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

#ifndef REFSEG_MASKGEN_H_
#define REFSEG_MASKGEN_H_

#include <optional>
#include <span>
#include <string>

#include "refseg/exprgen.h"
#include "refseg/raster.h"
#include "refseg/taxonomy.h"

namespace refseg {

// Buffer and thresholds used by the spatial-relation predicates. The
// defaults assume 512-pixel scenes.
struct SpatialPredicateConfig {
  int buffer_radius = 3;
  double tau_on = 0.5;
  double tau_surround = 0.8;
  int connectivity = 8;

  void Validate() const;
  bool operator==(const SpatialPredicateConfig&) const = default;
};

BinaryMask CategoryMask(const LabelMap& map, const Taxonomy& taxonomy,
                        const std::string& category,
                        const std::optional<std::string>& attribute = std::nullopt);

// Buffer ring of one instance: its dilation by buffer_radius minus the
// instance itself.
BinaryMask Ring(std::span<const PixelIndex> instance,
                const SpatialPredicateConfig& cfg, int width, int height);

// Ring pixel counts: how many ring pixels exist and how many of them fall on
// the reference mask.
struct RingOverlap {
  std::int64_t ring = 0;
  std::int64_t on_reference = 0;
};

RingOverlap MeasureRing(std::span<const PixelIndex> instance,
                        const BinaryMask& reference,
                        const SpatialPredicateConfig& cfg);

// True iff the instance's ring touches the reference mask.
bool AdjacencyHolds(std::span<const PixelIndex> instance,
                    const BinaryMask& reference,
                    const SpatialPredicateConfig& cfg);

// True iff the share of ring pixels lying on the reference reaches tau_on
// (kOn) or tau_surround (kSurrounded). An empty ring never satisfies it.
bool ContainmentHolds(std::span<const PixelIndex> instance,
                      const BinaryMask& reference,
                      const SpatialPredicateConfig& cfg,
                      ContainmentStrength strength);

bool RelationHolds(const RelationRule& relation,
                   std::span<const PixelIndex> instance,
                   const BinaryMask& reference,
                   const SpatialPredicateConfig& cfg);

// Ground-truth mask for an expression: the category mask, or, when a
// relation is present, the union of the category's instances that satisfy
// the relation against the reference category's mask.
BinaryMask GenerateMask(const LabelMap& map, const Taxonomy& taxonomy,
                        const Expression& expression,
                        const SpatialPredicateConfig& cfg);

}  // namespace refseg

#endif  // REFSEG_MASKGEN_H_
