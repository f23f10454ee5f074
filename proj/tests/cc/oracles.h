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

// Brute-force reference implementations used as test oracles. They share no
// code with the library beyond the plain data structs.

#ifndef REFSEG_TESTS_ORACLES_H_
#define REFSEG_TESTS_ORACLES_H_

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "refseg/metrics.h"
#include "refseg/raster.h"

namespace refseg::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "refseg_XXXXXX").string();
    path_ = mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string operator/(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

inline int Uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline BinaryMask RandomMask(std::mt19937_64& rng, int width, int height, double p) {
  BinaryMask m{width, height, std::vector<std::uint8_t>(width * height)};
  std::bernoulli_distribution bit(p);
  for (auto& b : m.bits) b = bit(rng) ? 1 : 0;
  return m;
}

// Naive per-pixel intersection and union counts.
inline IouCounts IouOracle(const BinaryMask& a, const BinaryMask& b) {
  IouCounts c;
  for (int r = 0; r < a.height; ++r) {
    for (int col = 0; col < a.width; ++col) {
      const bool x = a.at(r, col), y = b.at(r, col);
      c.intersection += x && y;
      c.union_ += x || y;
    }
  }
  return c;
}

// Background class plus a scatter of rectangles drawn from `classes`.
inline LabelMap RandomBlockMap(std::mt19937_64& rng, int width, int height,
                               const std::vector<ClassId>& classes, int rects) {
  LabelMap map{width, height, std::vector<ClassId>(width * height, classes[0])};
  for (int k = 0; k < rects; ++k) {
    const ClassId id = classes[Uniform(rng, 0, static_cast<int>(classes.size()) - 1)];
    const int h = Uniform(rng, 1, std::max(1, height / 3));
    const int w = Uniform(rng, 1, std::max(1, width / 3));
    const int r0 = Uniform(rng, 0, height - h), c0 = Uniform(rng, 0, width - w);
    for (int r = r0; r < r0 + h; ++r) {
      for (int c = c0; c < c0 + w; ++c) map.pixels[r * width + c] = id;
    }
  }
  return map;
}

// Breadth-first flood fill. Returns an instance id per pixel (-1 for
// background); ids are assigned in row-major order of first discovery.
inline std::vector<int> FloodFillLabels(const std::vector<std::uint8_t>& fg, int width,
                                        int height, int connectivity, int* count) {
  std::vector<int> label(fg.size(), -1);
  int next = 0;
  for (int start = 0; start < width * height; ++start) {
    if (!fg[start] || label[start] >= 0) continue;
    std::deque<int> queue{start};
    label[start] = next;
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      const int r = p / width, c = p % width;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (connectivity == 4 && dr != 0 && dc != 0) continue;
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nr >= height || nc < 0 || nc >= width) continue;
          const int q = nr * width + nc;
          if (fg[q] && label[q] < 0) {
            label[q] = next;
            queue.push_back(q);
          }
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

inline std::vector<std::vector<PixelIndex>> FloodFillInstances(const BinaryMask& m,
                                                              int connectivity) {
  int n = 0;
  const auto label = FloodFillLabels(m.bits, m.width, m.height, connectivity, &n);
  std::vector<std::vector<PixelIndex>> out(n);
  for (int p = 0; p < static_cast<int>(label.size()); ++p) {
    if (label[p] >= 0) out[label[p]].push_back(p);
  }
  return out;
}

// Per-pixel window test: foreground iff any source pixel within Chebyshev
// distance `radius`.
inline BinaryMask DilateOracle(const BinaryMask& m, int radius) {
  BinaryMask out{m.width, m.height, std::vector<std::uint8_t>(m.bits.size(), 0)};
  for (int r = 0; r < m.height; ++r) {
    for (int c = 0; c < m.width; ++c) {
      bool hit = false;
      for (int rr = r - radius; rr <= r + radius && !hit; ++rr) {
        for (int cc = c - radius; cc <= c + radius && !hit; ++cc) {
          if (rr >= 0 && rr < m.height && cc >= 0 && cc < m.width &&
              m.bits[rr * m.width + cc]) {
            hit = true;
          }
        }
      }
      out.bits[r * m.width + c] = hit ? 1 : 0;
    }
  }
  return out;
}

// Ring pixel lists for every instance of `fg`: pixels within Chebyshev
// distance `radius` of the instance that are not part of it. Found by
// scanning each pixel's window for instance ids.
inline std::vector<std::vector<int>> RingsOracle(const std::vector<int>& label, int count,
                                                 int width, int height, int radius) {
  std::vector<std::vector<int>> rings(count);
  std::vector<int> seen;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int q = r * width + c;
      seen.clear();
      for (int rr = std::max(0, r - radius); rr <= std::min(height - 1, r + radius); ++rr) {
        for (int cc = std::max(0, c - radius); cc <= std::min(width - 1, c + radius); ++cc) {
          const int id = label[rr * width + cc];
          if (id >= 0 && id != label[q] &&
              std::find(seen.begin(), seen.end(), id) == seen.end()) {
            seen.push_back(id);
          }
        }
      }
      for (int id : seen) rings[id].push_back(q);
    }
  }
  return rings;
}

}  // namespace refseg::testing

#endif  // REFSEG_TESTS_ORACLES_H_
