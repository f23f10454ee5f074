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

// Small hand-made datasets shared by unit, CLI and acceptance tests.

#ifndef REFSEG_TESTS_FIXTURES_H_
#define REFSEG_TESTS_FIXTURES_H_

#include <filesystem>
#include <string>
#include <vector>

#include "refseg/dataset.h"
#include "refseg/image_io.h"

namespace refseg::testing {

struct MaskPair {
  std::vector<int> gt;
  std::vector<int> pred;
};

// Six 4x4 ground-truth / prediction pairs. Per-pair (intersection, union):
// (4,4) (2,4) (2,4) (0,2) (6,8) (4,6).
inline const std::vector<MaskPair>& SixPairs() {
  static const std::vector<MaskPair> pairs = {
      {{0, 1, 2, 3}, {0, 1, 2, 3}},
      {{0, 1, 2, 3}, {0, 1}},
      {{0, 1, 2}, {1, 2, 3}},
      {{5, 6}, {}},
      {{0, 1, 2, 3, 4, 5}, {0, 1, 2, 3, 4, 5, 6, 7}},
      {{0, 1, 2, 3, 4}, {1, 2, 3, 4, 5}},
  };
  return pairs;
}

inline BinaryMask MaskFromPixels(const std::vector<int>& pixels, int width = 4,
                                 int height = 4) {
  BinaryMask m = BinaryMask::Empty(width, height);
  for (int p : pixels) m.bits[p] = 1;
  return m;
}

struct SixPairPaths {
  std::string manifest;
  std::string pred_dir;
  std::vector<std::string> ids;
};

// Writes the six pairs as a test-split manifest under `root` and the
// predictions under <root>/pred.
inline SixPairPaths WriteSixPairFixture(const std::string& root) {
  namespace fs = std::filesystem;
  const Taxonomy t = RefSegRsTaxonomy();
  const auto exprs = EnumerateExpressions(t);
  Manifest m;
  SixPairPaths out;
  out.manifest = root + "/manifest.jsonl";
  out.pred_dir = root + "/pred";
  for (std::size_t i = 0; i < SixPairs().size(); ++i) {
    const MaskPair& pair = SixPairs()[i];
    TripletRecord r;
    r.scene_id = "fixture";
    r.expression = exprs[i];
    r.id = TripletId(r.scene_id, r.expression.text);
    r.mask_path = "masks/" + r.id + ".png";
    r.image_path = "images/fixture.png";
    r.label_path = "labels/fixture.png";
    r.split = Split::kTest;
    r.foreground_ratio = pair.gt.size() / 16.0;
    fs::create_directories(fs::path(root) / "masks" / r.scene_id);
    fs::create_directories(fs::path(out.pred_dir) / r.scene_id);
    WriteMaskPng(root + "/" + r.mask_path, MaskFromPixels(pair.gt));
    WriteMaskPng(out.pred_dir + "/" + r.id + ".png", MaskFromPixels(pair.pred));
    out.ids.push_back(r.id);
    m.records.push_back(r);
  }
  m.cfg_snapshot.taxonomy_hash = TaxonomyHash(t);
  SaveManifest(m, out.manifest);
  return out;
}

// Hand-computed report for the six pairs, thresholds 0.5 .. 0.9, strict.
// IoUs: 1, 1/2, 1/2, 0, 3/4, 2/3.
inline constexpr double kSixPairPr[5] = {3.0 / 6, 3.0 / 6, 2.0 / 6, 1.0 / 6, 1.0 / 6};
inline constexpr double kSixPairOiou = 18.0 / 28.0;
inline constexpr double kSixPairMiou = (1.0 + 0.5 + 0.5 + 0.0 + 0.75 + 2.0 / 3.0) / 6.0;
inline constexpr const char* kSixPairRow =
    "fixture  0.5000  0.5000  0.3333  0.1667  0.1667  0.6429  0.5694";

}  // namespace refseg::testing

#endif  // REFSEG_TESTS_FIXTURES_H_
