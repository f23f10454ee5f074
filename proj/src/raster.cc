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

#include "refseg/raster.h"

#include <algorithm>
#include <numeric>

#include "refseg/image_io.h"

namespace refseg {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  PixelIndex Find(PixelIndex x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller root wins, so every root is its set's minimum pixel.
  void Union(PixelIndex a, PixelIndex b) {
    a = Find(a);
    b = Find(b);
    if (a == b) return;
    if (a < b) {
      parent_[b] = a;
    } else {
      parent_[a] = b;
    }
  }

 private:
  std::vector<PixelIndex> parent_;
};

// out[i] = 1 iff any in[j] != 0 with |i - j| <= radius, along one line of
// `length` samples spaced `step` apart.
void DilateLine(const std::uint8_t* in, std::uint8_t* out, int length,
                std::size_t step, int radius, std::vector<int>& prefix) {
  prefix.assign(length + 1, 0);
  for (int i = 0; i < length; ++i) {
    prefix[i + 1] = prefix[i] + (in[i * step] != 0 ? 1 : 0);
  }
  for (int i = 0; i < length; ++i) {
    const int lo = std::max(0, i - radius);
    const int hi = std::min(length, i + radius + 1);
    out[i * step] = prefix[hi] - prefix[lo] > 0 ? 1 : 0;
  }
}

void CheckRect(int width, int height, const CropRect& rect) {
  if (rect.side <= 0 || rect.x < 0 || rect.y < 0 || rect.x + rect.side > width ||
      rect.y + rect.side > height) {
    throw Error(ErrorCode::kInvalidArgument, "crop rectangle outside raster");
  }
}

}  // namespace

BinaryMask BinaryMask::Empty(int width, int height) {
  BinaryMask mask;
  mask.width = width;
  mask.height = height;
  mask.bits.assign(static_cast<std::size_t>(width) * height, 0);
  return mask;
}

std::int64_t BinaryMask::Count() const {
  return std::count_if(bits.begin(), bits.end(),
                       [](std::uint8_t b) { return b != 0; });
}

void TileSpec::Validate() const {
  if (window <= 0 || stride <= 0 || stride > window || output_side <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "tile spec requires 0 < stride <= window and output_side > 0");
  }
}

void ValidateLabelMap(const LabelMap& map, const ClassIdSet& valid_ids) {
  if (map.width <= 0 || map.height <= 0 ||
      map.pixels.size() != static_cast<std::size_t>(map.width) * map.height) {
    throw Error(ErrorCode::kInvalidArgument, "label map has invalid dimensions");
  }
  for (std::size_t i = 0; i < map.pixels.size(); ++i) {
    if (!valid_ids.test(map.pixels[i])) {
      const int row = static_cast<int>(i / map.width);
      const int col = static_cast<int>(i % map.width);
      throw Error(ErrorCode::kUnknownClassId,
                  "pixel value " + std::to_string(map.pixels[i]) + " at (row " +
                      std::to_string(row) + ", col " + std::to_string(col) +
                      ") is not a taxonomy class id");
    }
  }
}

LabelMap LoadLabelMap(const std::string& path, const Taxonomy& taxonomy) {
  LabelMap map = ReadGrayPng(path);
  try {
    ValidateLabelMap(map, taxonomy.ClassIds());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
  return map;
}

BinaryMask ClassMask(const LabelMap& map, std::span<const ClassId> ids) {
  if (ids.empty()) throw Error(ErrorCode::kEmptyIdSet, "class id set is empty");
  ClassIdSet wanted;
  for (ClassId id : ids) wanted.set(id);
  BinaryMask mask = BinaryMask::Empty(map.width, map.height);
  for (std::size_t i = 0; i < map.pixels.size(); ++i) {
    mask.bits[i] = wanted.test(map.pixels[i]) ? 1 : 0;
  }
  return mask;
}

InstanceSet ConnectedComponents(const BinaryMask& mask, int connectivity) {
  if (connectivity != 4 && connectivity != 8) {
    throw Error(ErrorCode::kInvalidArgument, "connectivity must be 4 or 8");
  }
  const int w = mask.width;
  const int h = mask.height;
  DisjointSets sets(mask.size());
  // First pass: union with the already-visited neighbours (west, north and,
  // for 8-connectivity, north-west and north-east).
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask.at(r, c)) continue;
      const auto self = static_cast<PixelIndex>(mask.Index(r, c));
      if (c > 0 && mask.at(r, c - 1)) sets.Union(self, self - 1);
      if (r > 0) {
        if (mask.at(r - 1, c)) sets.Union(self, self - w);
        if (connectivity == 8) {
          if (c > 0 && mask.at(r - 1, c - 1)) sets.Union(self, self - w - 1);
          if (c + 1 < w && mask.at(r - 1, c + 1)) sets.Union(self, self - w + 1);
        }
      }
    }
  }

  InstanceSet out;
  out.connectivity = connectivity;
  std::vector<int> slot(mask.size(), -1);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask.bits[i]) continue;
    const PixelIndex root = sets.Find(static_cast<PixelIndex>(i));
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(out.instances.size());
      out.instances.emplace_back();
    }
    out.instances[slot[root]].push_back(static_cast<PixelIndex>(i));
  }
  return out;
}

BinaryMask Dilate(const BinaryMask& mask, int radius) {
  if (radius < 0) throw Error(ErrorCode::kInvalidArgument, "radius must be >= 0");
  if (radius == 0) return mask;
  // The square structuring element is separable: dilate rows, then columns.
  BinaryMask rows = BinaryMask::Empty(mask.width, mask.height);
  std::vector<int> prefix;
  for (int r = 0; r < mask.height; ++r) {
    const std::size_t base = mask.Index(r, 0);
    DilateLine(&mask.bits[base], &rows.bits[base], mask.width, 1, radius, prefix);
  }
  BinaryMask out = BinaryMask::Empty(mask.width, mask.height);
  for (int c = 0; c < mask.width; ++c) {
    DilateLine(&rows.bits[c], &out.bits[c], mask.height,
               static_cast<std::size_t>(mask.width), radius, prefix);
  }
  return out;
}

BinaryMask MaskFromPixels(std::span<const PixelIndex> pixels, int width,
                          int height) {
  BinaryMask mask = BinaryMask::Empty(width, height);
  for (PixelIndex p : pixels) mask.bits[p] = 1;
  return mask;
}

std::vector<CropRect> TileCrops(int width, int height, const TileSpec& spec) {
  spec.Validate();
  if (spec.window > width || spec.window > height) {
    throw Error(ErrorCode::kWindowTooLarge,
                "window " + std::to_string(spec.window) + " exceeds raster " +
                    std::to_string(width) + "x" + std::to_string(height));
  }
  const int across = (width - spec.window) / spec.stride + 1;
  const int down = (height - spec.window) / spec.stride + 1;
  std::vector<CropRect> crops;
  crops.reserve(static_cast<std::size_t>(across) * down);
  for (int j = 0; j < down; ++j) {
    for (int i = 0; i < across; ++i) {
      crops.push_back({i * spec.stride, j * spec.stride, spec.window});
    }
  }
  return crops;
}

LabelMap CropLabels(const LabelMap& map, const CropRect& rect) {
  CheckRect(map.width, map.height, rect);
  LabelMap out;
  out.width = out.height = rect.side;
  out.pixels.reserve(static_cast<std::size_t>(rect.side) * rect.side);
  for (int r = 0; r < rect.side; ++r) {
    const auto begin = map.pixels.begin() + map.Index(rect.y + r, rect.x);
    out.pixels.insert(out.pixels.end(), begin, begin + rect.side);
  }
  return out;
}

RgbImage CropImage(const RgbImage& image, const CropRect& rect) {
  CheckRect(image.width, image.height, rect);
  RgbImage out;
  out.width = out.height = rect.side;
  out.rgb.reserve(static_cast<std::size_t>(rect.side) * rect.side * 3);
  for (int r = 0; r < rect.side; ++r) {
    const auto begin =
        image.rgb.begin() +
        (static_cast<std::size_t>(rect.y + r) * image.width + rect.x) * 3;
    out.rgb.insert(out.rgb.end(), begin, begin + rect.side * 3);
  }
  return out;
}

LabelMap ResampleLabels(const LabelMap& map, int out_side) {
  if (map.width != map.height) {
    throw Error(ErrorCode::kNonSquareInput,
                "label resampling requires a square map, got " +
                    std::to_string(map.width) + "x" + std::to_string(map.height));
  }
  if (out_side <= 0) throw Error(ErrorCode::kInvalidArgument, "out_side must be > 0");
  const std::int64_t in = map.width;
  std::vector<int> source(out_side);
  for (int i = 0; i < out_side; ++i) {
    source[i] = static_cast<int>(i * in / out_side);
  }
  LabelMap out;
  out.width = out.height = out_side;
  out.pixels.resize(static_cast<std::size_t>(out_side) * out_side);
  for (int r = 0; r < out_side; ++r) {
    for (int c = 0; c < out_side; ++c) {
      out.pixels[out.Index(r, c)] = map.at(source[r], source[c]);
    }
  }
  return out;
}

RgbImage ResampleImage(const RgbImage& image, int out_side) {
  if (image.width != image.height) {
    throw Error(ErrorCode::kNonSquareInput, "image resampling requires a square image");
  }
  if (out_side <= 0) throw Error(ErrorCode::kInvalidArgument, "out_side must be > 0");
  const std::int64_t in = image.width;
  RgbImage out;
  out.width = out.height = out_side;
  out.rgb.resize(static_cast<std::size_t>(out_side) * out_side * 3);
  for (int r = 0; r < out_side; ++r) {
    const std::int64_t r0 = r * in / out_side;
    const std::int64_t r1 = std::max(r0 + 1, ((r + 1) * in + out_side - 1) / out_side);
    for (int c = 0; c < out_side; ++c) {
      const std::int64_t c0 = c * in / out_side;
      const std::int64_t c1 =
          std::max(c0 + 1, ((c + 1) * in + out_side - 1) / out_side);
      std::int64_t sum[3] = {0, 0, 0};
      for (std::int64_t y = r0; y < r1; ++y) {
        for (std::int64_t x = c0; x < c1; ++x) {
          const std::size_t base = (y * in + x) * 3;
          for (int k = 0; k < 3; ++k) sum[k] += image.rgb[base + k];
        }
      }
      const std::int64_t n = (r1 - r0) * (c1 - c0);
      const std::size_t dst = (static_cast<std::size_t>(r) * out_side + c) * 3;
      for (int k = 0; k < 3; ++k) {
        out.rgb[dst + k] = static_cast<std::uint8_t>((sum[k] + n / 2) / n);
      }
    }
  }
  return out;
}

}  // namespace refseg
