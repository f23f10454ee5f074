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

#include <gtest/gtest.h>

#include "oracles.h"
#include "refseg/image_io.h"
#include "refseg/taxonomy.h"

namespace refseg {
namespace {

using testing::DilateOracle;
using testing::FloodFillInstances;
using testing::RandomMask;
using testing::TempDir;

BinaryMask MaskOf(int w, int h, std::initializer_list<std::pair<int, int>> on) {
  BinaryMask m = BinaryMask::Empty(w, h);
  for (auto [r, c] : on) m.set(r, c);
  return m;
}

TEST(LoadLabelMapTest, DecodesSmallRaster) {
  TempDir dir;
  const std::vector<std::uint8_t> px = {0, 0, 0, 0};
  WriteGrayPng(dir / "a.png", 2, 2, px);
  const LabelMap m = LoadLabelMap(dir / "a.png", RefSegRsTaxonomy());
  EXPECT_EQ(m.width, 2);
  EXPECT_EQ(m.height, 2);
  EXPECT_EQ(m.pixels, std::vector<ClassId>(4, 0));
}

TEST(LoadLabelMapTest, RejectsUnknownClassWithCoordinates) {
  TempDir dir;
  const std::vector<std::uint8_t> px = {0, 1, 2, 99, 0, 99};
  WriteGrayPng(dir / "a.png", 3, 2, px);
  try {
    LoadLabelMap(dir / "a.png", RefSegRsTaxonomy());
    FAIL() << "expected UnknownClassId";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownClassId);
    EXPECT_NE(std::string(e.what()).find("row 1, col 0"), std::string::npos) << e.what();
  }
}

TEST(LoadLabelMapTest, RejectsRgbRaster) {
  TempDir dir;
  WriteRgbPng(dir / "rgb.png", RgbImage{2, 1, {1, 2, 3, 4, 5, 6}});
  try {
    LoadLabelMap(dir / "rgb.png", RefSegRsTaxonomy());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDecodeError);
  }
}

TEST(LoadLabelMapTest, FullSizeTile) {
  TempDir dir;
  const int w = 5616, h = 3744;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i % 20);
  WriteGrayPng(dir / "big.png", w, h, px);
  const LabelMap m = LoadLabelMap(dir / "big.png", RefSegRsTaxonomy());
  EXPECT_EQ(m.size(), 21026304u);
  EXPECT_EQ(static_cast<std::size_t>(w) * h, 21026304u);
  EXPECT_EQ(m.pixels, px);
}

TEST(ClassMaskTest, MultiIdMembership) {
  const LabelMap map{2, 2, {2, 1, 1, 3}};
  const std::vector<ClassId> ids = {2, 3};
  EXPECT_EQ(ClassMask(map, ids).bits, (std::vector<std::uint8_t>{1, 0, 0, 1}));
}

TEST(ClassMaskTest, AllIdsGiveFullMask) {
  const LabelMap map{3, 1, {0, 5, 19}};
  std::vector<ClassId> all;
  for (int i = 0; i < 20; ++i) all.push_back(static_cast<ClassId>(i));
  EXPECT_EQ(ClassMask(map, all).Count(), 3);
}

TEST(ClassMaskTest, EmptyIdSetThrows) {
  const LabelMap map{1, 1, {0}};
  try {
    ClassMask(map, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyIdSet);
  }
}

TEST(ClassMaskTest, UnionOfDisjointSetsIsOr) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const LabelMap map = testing::RandomBlockMap(rng, 64, 64, {0, 1, 2, 3, 4, 5}, 12);
    const std::vector<ClassId> a = {static_cast<ClassId>(t % 6)};
    const std::vector<ClassId> b = {static_cast<ClassId>((t + 1) % 6)};
    const std::vector<ClassId> ab = {a[0], b[0]};
    const BinaryMask ma = ClassMask(map, a), mb = ClassMask(map, b), mab = ClassMask(map, ab);
    for (std::size_t i = 0; i < map.size(); ++i) {
      ASSERT_EQ(mab.bits[i], ma.bits[i] | mb.bits[i]);
    }
  }
}

TEST(ConnectedComponentsTest, FourConnectedPair) {
  const BinaryMask m = MaskOf(4, 4, {{0, 0}, {0, 1}, {3, 3}});
  const InstanceSet s = ConnectedComponents(m, 4);
  ASSERT_EQ(s.instances.size(), 2u);
  EXPECT_EQ(s.instances[0], (std::vector<PixelIndex>{0, 1}));
  EXPECT_EQ(s.instances[1], (std::vector<PixelIndex>{15}));
}

TEST(ConnectedComponentsTest, DiagonalDependsOnConnectivity) {
  const BinaryMask m = MaskOf(3, 3, {{0, 0}, {1, 1}});
  EXPECT_EQ(ConnectedComponents(m, 8).instances.size(), 1u);
  EXPECT_EQ(ConnectedComponents(m, 4).instances.size(), 2u);
}

TEST(ConnectedComponentsTest, EmptyMask) {
  EXPECT_TRUE(ConnectedComponents(BinaryMask::Empty(5, 5)).instances.empty());
}

TEST(ConnectedComponentsTest, MatchesFloodFill) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const BinaryMask m = RandomMask(rng, 32, 32, 0.15 + 0.5 * (t % 4) / 4.0);
    for (int conn : {4, 8}) {
      const InstanceSet s = ConnectedComponents(m, conn);
      EXPECT_EQ(s.connectivity, conn);
      ASSERT_EQ(s.instances, FloodFillInstances(m, conn)) << "trial " << t;
    }
  }
}

TEST(ConnectedComponentsTest, PartitionsForeground) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const BinaryMask m = RandomMask(rng, 20, 17, 0.4);
    std::vector<int> hits(m.size(), 0);
    for (const auto& inst : ConnectedComponents(m).instances) {
      ASSERT_FALSE(inst.empty());
      for (PixelIndex p : inst) ++hits[p];
    }
    for (std::size_t i = 0; i < m.size(); ++i) ASSERT_EQ(hits[i], m.bits[i]);
  }
}

TEST(DilateTest, SinglePixelRadiusOne) {
  const BinaryMask d = Dilate(MaskOf(5, 5, {{2, 2}}), 1);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      EXPECT_EQ(d.at(r, c), r >= 1 && r <= 3 && c >= 1 && c <= 3);
    }
  }
}

TEST(DilateTest, RadiusZeroIsIdentity) {
  std::mt19937_64 rng(3);
  const BinaryMask m = RandomMask(rng, 9, 7, 0.3);
  EXPECT_EQ(Dilate(m, 0), m);
}

TEST(DilateTest, MatchesWindowOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const BinaryMask m = RandomMask(rng, 32, 32, 0.02 + 0.1 * (t % 5));
    for (int radius : {1, 2, 3}) {
      ASSERT_EQ(Dilate(m, radius), DilateOracle(m, radius)) << "trial " << t;
    }
  }
}

TEST(DilateTest, MonotoneAndExtensive) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 30; ++t) {
    const BinaryMask m = RandomMask(rng, 16, 24, 0.05);
    BinaryMask prev = m;
    for (int radius = 1; radius <= 4; ++radius) {
      const BinaryMask d = Dilate(m, radius);
      for (std::size_t i = 0; i < m.size(); ++i) ASSERT_LE(prev.bits[i], d.bits[i]);
      prev = d;
    }
  }
}

TEST(TileCropsTest, FullSizeTileGivesForty) {
  const auto crops = TileCrops(5616, 3744, {});
  const int across = (5616 - 1200) / 600 + 1, down = (3744 - 1200) / 600 + 1;
  EXPECT_EQ(across, 8);
  EXPECT_EQ(down, 5);
  ASSERT_EQ(crops.size(), 40u);
  EXPECT_EQ(crops.front(), (CropRect{0, 0, 1200}));
  EXPECT_EQ(crops[1], (CropRect{600, 0, 1200}));
  EXPECT_EQ(crops[8], (CropRect{0, 600, 1200}));
  for (const CropRect& c : crops) {
    EXPECT_LE(c.x + c.side, 5616);
    EXPECT_LE(c.y + c.side, 3744);
  }
}

TEST(TileCropsTest, ExactFitAndTooLarge) {
  EXPECT_EQ(TileCrops(1200, 1200, {}).size(), 1u);
  try {
    TileCrops(1000, 1000, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWindowTooLarge);
  }
}

TEST(TileCropsTest, CountMatchesFormula) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    TileSpec spec;
    spec.window = testing::Uniform(rng, 1, 50);
    spec.stride = testing::Uniform(rng, 1, spec.window);
    const int w = testing::Uniform(rng, spec.window, 200);
    const int h = testing::Uniform(rng, spec.window, 200);
    const std::size_t expected = static_cast<std::size_t>((w - spec.window) / spec.stride + 1) *
                                 ((h - spec.window) / spec.stride + 1);
    ASSERT_EQ(TileCrops(w, h, spec).size(), expected);
  }
}

TEST(TileSpecTest, RejectsBadStride) {
  TileSpec spec;
  spec.stride = 1300;
  EXPECT_THROW(spec.Validate(), Error);
  spec.stride = 0;
  EXPECT_THROW(spec.Validate(), Error);
}

TEST(ResampleLabelsTest, ConstantField) {
  const LabelMap m{4, 4, std::vector<ClassId>(16, 7)};
  const LabelMap out = ResampleLabels(m, 2);
  EXPECT_EQ(out.width, 2);
  EXPECT_EQ(out.pixels, std::vector<ClassId>(4, 7));
}

TEST(ResampleLabelsTest, IndexMappingOracle) {
  std::mt19937_64 rng(4);
  LabelMap m{1200, 1200, std::vector<ClassId>(1200 * 1200)};
  for (auto& p : m.pixels) p = static_cast<ClassId>(rng() % 20);
  const LabelMap out = ResampleLabels(m, 512);
  ASSERT_EQ(out.width, 512);
  for (int r = 0; r < 512; ++r) {
    for (int c = 0; c < 512; ++c) {
      ASSERT_EQ(out.at(r, c), m.at(r * 1200 / 512, c * 1200 / 512));
    }
  }
}

TEST(ResampleLabelsTest, IdentityAndNonSquare) {
  const LabelMap m{2, 2, {1, 2, 3, 4}};
  EXPECT_EQ(ResampleLabels(m, 2), m);
  try {
    ResampleLabels(LabelMap{2, 3, std::vector<ClassId>(6)}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonSquareInput);
  }
}

TEST(CropTest, CropLabelsCopiesWindow) {
  LabelMap m{4, 3, {}};
  for (int i = 0; i < 12; ++i) m.pixels.push_back(static_cast<ClassId>(i));
  const LabelMap c = CropLabels(m, {1, 1, 2});
  EXPECT_EQ(c.pixels, (std::vector<ClassId>{5, 6, 9, 10}));
}

TEST(ResampleImageTest, BoxAverage) {
  const RgbImage img{2, 2, {0, 0, 0, 10, 20, 30, 20, 40, 60, 30, 60, 90}};
  const RgbImage out = ResampleImage(img, 1);
  EXPECT_EQ(out.rgb, (std::vector<std::uint8_t>{15, 30, 45}));
}

}  // namespace
}  // namespace refseg
