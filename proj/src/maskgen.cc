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

#include "refseg/maskgen.h"

#include <algorithm>

namespace refseg {

namespace {

struct Window {
  int row0, col0, rows, cols;
};

// Bounding box of the instance grown by `radius`, clipped to the raster.
Window BufferWindow(std::span<const PixelIndex> instance, int radius, int width,
                    int height) {
  int r_min = height, r_max = -1, c_min = width, c_max = -1;
  for (PixelIndex p : instance) {
    const int r = p / width;
    const int c = p % width;
    r_min = std::min(r_min, r);
    r_max = std::max(r_max, r);
    c_min = std::min(c_min, c);
    c_max = std::max(c_max, c);
  }
  const int row0 = std::max(0, r_min - radius);
  const int col0 = std::max(0, c_min - radius);
  const int row1 = std::min(height - 1, r_max + radius);
  const int col1 = std::min(width - 1, c_max + radius);
  return {row0, col0, row1 - row0 + 1, col1 - col0 + 1};
}

// Calls visit(row, col) for every ring pixel, working inside the instance's
// buffered bounding box only.
template <typename Visit>
void ForEachRingPixel(std::span<const PixelIndex> instance, int radius, int width,
                      int height, Visit&& visit) {
  if (instance.empty() || radius == 0) return;
  const Window win = BufferWindow(instance, radius, width, height);
  BinaryMask local = BinaryMask::Empty(win.cols, win.rows);
  for (PixelIndex p : instance) {
    local.set(p / width - win.row0, p % width - win.col0);
  }
  const BinaryMask grown = Dilate(local, radius);
  for (int r = 0; r < win.rows; ++r) {
    for (int c = 0; c < win.cols; ++c) {
      if (grown.at(r, c) && !local.at(r, c)) visit(win.row0 + r, win.col0 + c);
    }
  }
}

}  // namespace

void SpatialPredicateConfig::Validate() const {
  if (buffer_radius < 0) {
    throw Error(ErrorCode::kInvalidArgument, "buffer_radius must be >= 0");
  }
  if (!(0.0 <= tau_on && tau_on <= tau_surround && tau_surround <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "thresholds must satisfy 0 <= tau_on <= tau_surround <= 1");
  }
  if (connectivity != 4 && connectivity != 8) {
    throw Error(ErrorCode::kInvalidArgument, "connectivity must be 4 or 8");
  }
}

BinaryMask CategoryMask(const LabelMap& map, const Taxonomy& taxonomy,
                        const std::string& category,
                        const std::optional<std::string>& attribute) {
  const std::vector<ClassId> ids = ResolveCategory(taxonomy, category, attribute);
  return ClassMask(map, ids);
}

BinaryMask Ring(std::span<const PixelIndex> instance,
                const SpatialPredicateConfig& cfg, int width, int height) {
  BinaryMask ring = BinaryMask::Empty(width, height);
  ForEachRingPixel(instance, cfg.buffer_radius, width, height,
                   [&ring](int r, int c) { ring.set(r, c); });
  return ring;
}

RingOverlap MeasureRing(std::span<const PixelIndex> instance,
                        const BinaryMask& reference,
                        const SpatialPredicateConfig& cfg) {
  RingOverlap overlap;
  ForEachRingPixel(instance, cfg.buffer_radius, reference.width, reference.height,
                   [&](int r, int c) {
                     ++overlap.ring;
                     if (reference.at(r, c)) ++overlap.on_reference;
                   });
  return overlap;
}

bool AdjacencyHolds(std::span<const PixelIndex> instance,
                    const BinaryMask& reference,
                    const SpatialPredicateConfig& cfg) {
  return MeasureRing(instance, reference, cfg).on_reference > 0;
}

bool ContainmentHolds(std::span<const PixelIndex> instance,
                      const BinaryMask& reference,
                      const SpatialPredicateConfig& cfg,
                      ContainmentStrength strength) {
  const RingOverlap overlap = MeasureRing(instance, reference, cfg);
  if (overlap.ring == 0) return false;
  const double tau =
      strength == ContainmentStrength::kOn ? cfg.tau_on : cfg.tau_surround;
  return static_cast<double>(overlap.on_reference) /
             static_cast<double>(overlap.ring) >=
         tau;
}

bool RelationHolds(const RelationRule& relation,
                   std::span<const PixelIndex> instance,
                   const BinaryMask& reference,
                   const SpatialPredicateConfig& cfg) {
  if (relation.kind == RelationKind::kAdjacency) {
    return AdjacencyHolds(instance, reference, cfg);
  }
  return ContainmentHolds(instance, reference, cfg, relation.Strength());
}

BinaryMask GenerateMask(const LabelMap& map, const Taxonomy& taxonomy,
                        const Expression& expression,
                        const SpatialPredicateConfig& cfg) {
  cfg.Validate();
  BinaryMask subject =
      CategoryMask(map, taxonomy, expression.category, expression.attribute);
  if (!expression.relation) return subject;

  const RelationRule* relation = taxonomy.FindRelation(*expression.relation);
  if (relation == nullptr) {
    throw Error(ErrorCode::kUnknownRelation,
                "unknown relation '" + *expression.relation + "'");
  }
  if (!relation->AppliesTo(expression.category)) {
    throw Error(ErrorCode::kInvalidCombination,
                "relation '" + relation->name + "' does not apply to '" +
                    expression.category + "'");
  }
  const BinaryMask reference =
      CategoryMask(map, taxonomy, relation->reference_category);

  BinaryMask out = BinaryMask::Empty(map.width, map.height);
  for (const auto& instance :
       ConnectedComponents(subject, cfg.connectivity).instances) {
    if (RelationHolds(*relation, instance, reference, cfg)) {
      for (PixelIndex p : instance) out.bits[p] = 1;
    }
  }
  return out;
}

}  // namespace refseg
