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

#ifndef REFSEG_RASTER_H_
#define REFSEG_RASTER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "refseg/taxonomy.h"

namespace refseg {

// Linear row-major pixel index (row * width + col).
using PixelIndex = std::int32_t;

// Dense grid of class ids. Every pixel value must belong to the taxonomy the
// map was loaded against.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<ClassId> pixels;

  ClassId at(int row, int col) const { return pixels[Index(row, col)]; }
  std::size_t Index(int row, int col) const {
    return static_cast<std::size_t>(row) * width + col;
  }
  std::size_t size() const { return pixels.size(); }

  bool operator==(const LabelMap&) const = default;
};

// Foreground flags stored one byte per pixel (0 or 1).
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  static BinaryMask Empty(int width, int height);

  bool at(int row, int col) const { return bits[Index(row, col)] != 0; }
  void set(int row, int col, bool value = true) {
    bits[Index(row, col)] = value ? 1 : 0;
  }
  std::size_t Index(int row, int col) const {
    return static_cast<std::size_t>(row) * width + col;
  }
  std::size_t size() const { return bits.size(); }
  std::int64_t Count() const;
  bool SameDims(const BinaryMask& other) const {
    return width == other.width && height == other.height;
  }

  bool operator==(const BinaryMask&) const = default;
};

// Connected foreground regions. Instances are pairwise disjoint, each holds
// its pixels in ascending order, and instances are ordered by their smallest
// pixel index.
struct InstanceSet {
  std::vector<std::vector<PixelIndex>> instances;
  int connectivity = 8;
};

// Sliding-window crop scheme: square windows of side `window` every `stride`
// pixels, each resampled to `output_side`.
struct TileSpec {
  int window = 1200;
  int stride = 600;
  int output_side = 512;

  void Validate() const;
};

// Crop rectangle, serialized as (x, y, side).
struct CropRect {
  int x = 0;
  int y = 0;
  int side = 0;

  bool operator==(const CropRect&) const = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major

  bool operator==(const RgbImage&) const = default;
};

// Throws UnknownClassId naming the first offending pixel (row-major).
void ValidateLabelMap(const LabelMap& map, const ClassIdSet& valid_ids);

// Reads an 8-bit single-channel PNG of class ids and validates it.
LabelMap LoadLabelMap(const std::string& path, const Taxonomy& taxonomy);

// Foreground iff the pixel's class id is one of `ids`. Several ids implement
// the union of subcategory masks in one pass.
BinaryMask ClassMask(const LabelMap& map, std::span<const ClassId> ids);

// Union-find labelling. connectivity must be 4 or 8.
InstanceSet ConnectedComponents(const BinaryMask& mask, int connectivity = 8);

// Dilation with a (2*radius+1)^2 square structuring element: a pixel becomes
// foreground iff some source foreground pixel lies within Chebyshev distance
// `radius`.
BinaryMask Dilate(const BinaryMask& mask, int radius);

BinaryMask MaskFromPixels(std::span<const PixelIndex> pixels, int width,
                          int height);

// Full windows at (i*stride, j*stride), row-major. Partial edge windows are
// dropped.
std::vector<CropRect> TileCrops(int width, int height, const TileSpec& spec);

LabelMap CropLabels(const LabelMap& map, const CropRect& rect);
RgbImage CropImage(const RgbImage& image, const CropRect& rect);

// Nearest-neighbour: output (r, c) takes source (floor(r*in/out),
// floor(c*in/out)). Requires a square map.
LabelMap ResampleLabels(const LabelMap& map, int out_side);

// Box-average resampling for display copies. Requires a square image.
RgbImage ResampleImage(const RgbImage& image, int out_side);

}  // namespace refseg

#endif  // REFSEG_RASTER_H_
