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

#ifndef REFSEG_DATASET_H_
#define REFSEG_DATASET_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refseg/exprgen.h"
#include "refseg/maskgen.h"
#include "refseg/raster.h"
#include "refseg/taxonomy.h"

namespace refseg {

enum class Split { kUnassigned, kTrain, kVal, kTest };
enum class Verdict { kPending, kKeep, kDiscard };

std::string_view SplitName(Split split);
std::optional<Split> SplitFromName(std::string_view name);
std::string_view VerdictName(Verdict verdict);
std::optional<Verdict> VerdictFromName(std::string_view name);

// Published RefSegRS corpus sizes, kept for reporting; the pipeline does not
// try to reproduce them.
struct ReferenceSplitSize {
  int scenes;
  int triplets;
};
inline constexpr int kRefSegRsTriplets = 4420;
inline constexpr int kRefSegRsScenes = 285;
inline constexpr ReferenceSplitSize kRefSegRsTrain = {151, 2172};
inline constexpr ReferenceSplitSize kRefSegRsVal = {31, 431};
inline constexpr ReferenceSplitSize kRefSegRsTest = {103, 1817};
// Default train/val/test scene fractions. On 285 scenes the largest-remainder
// allocation gives 151/31/103.
inline constexpr std::array<double, 3> kDefaultSplitFractions = {0.53, 0.11, 0.36};

// Paths are relative to the directory holding the manifest.
struct TripletRecord {
  std::string id;
  std::string scene_id;
  std::string image_path;
  std::string label_path;
  std::string mask_path;
  Expression expression;
  Split split = Split::kUnassigned;
  double foreground_ratio = 0.0;
  Verdict verdict = Verdict::kPending;

  bool operator==(const TripletRecord&) const = default;
};

struct ManifestConfig {
  SpatialPredicateConfig predicates;
  std::uint64_t taxonomy_hash = 0;

  bool operator==(const ManifestConfig&) const = default;
};

struct Manifest {
  std::vector<TripletRecord> records;
  ManifestConfig cfg_snapshot;
  // Directory the relative record paths resolve against. Not serialized.
  std::string root;

  const TripletRecord* Find(std::string_view id) const;
  std::string Resolve(const std::string& relative_path) const;
};

struct Scene {
  std::string scene_id;
  LabelMap labels;
  std::optional<RgbImage> image;  // a palette rendering is written if absent
};

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<std::int64_t> counts;
};

struct AssembleOptions {
  std::string output_dir;
  int workers = 1;
};

struct AssembleSummary {
  int scenes = 0;
  int triplets = 0;
  int dropped_empty = 0;
};

// One generated triplet before anything touches disk.
struct GeneratedTriplet {
  TripletRecord record;
  BinaryMask mask;
};

// Record ids are "<scene_id>/<expression text with spaces as underscores>".
std::string TripletId(std::string_view scene_id, std::string_view text);

// Enumerates every expression for one scene and generates its mask. Triplets
// whose mask is empty are dropped and counted in `dropped_empty`.
std::vector<GeneratedTriplet> BuildSceneTriplets(const std::string& scene_id,
                                                 const LabelMap& labels,
                                                 const Taxonomy& taxonomy,
                                                 const SpatialPredicateConfig& cfg,
                                                 int* dropped_empty = nullptr);

// Writes scene images, label maps and masks below options.output_dir and
// returns the manifest (all records pending, split unassigned). The manifest
// itself is not written.
Manifest Assemble(const std::vector<Scene>& scenes, const Taxonomy& taxonomy,
                  const SpatialPredicateConfig& cfg, const AssembleOptions& options,
                  AssembleSummary* summary = nullptr);

RgbImage RenderLabelPalette(const LabelMap& labels);

// Seeded scene-level shuffle followed by a floor-then-largest-remainder
// allocation of scene counts; every non-zero fraction receives at least one
// scene.
Manifest SplitByScene(const Manifest& manifest, std::array<double, 3> fractions,
                      std::uint64_t seed);

// Scene counts the split allocation assigns to (train, val, test).
std::array<int, 3> AllocateSceneCounts(int scenes, std::array<double, 3> fractions);

struct VerdictEvent {
  std::string id;
  Verdict verdict = Verdict::kPending;
  std::string reason;
  std::int64_t timestamp = 0;  // UTC seconds

  bool operator==(const VerdictEvent&) const = default;
};

// One manifest record as a single-line JSON object (the manifest line form).
std::string SerializeRecord(const TripletRecord& record);

// Replays the log in order; the last event for an id wins.
Manifest ApplyVerdicts(const Manifest& manifest,
                       std::span<const VerdictEvent> verdict_log);

// Drops discarded records, and pending ones unless include_pending is set.
Manifest ExportView(const Manifest& manifest, bool include_pending = false);

// Left-closed, right-open bins over [0, 1]; the last bin is closed.
Histogram ForegroundHistogram(const Manifest& manifest, double bin_width);
Histogram BinRatios(std::span<const double> ratios, double bin_width);

// Throws SplitOverlap / DuplicateTripletId on the first broken invariant.
void ValidateManifest(const Manifest& manifest);

struct LoadOptions {
  bool check_files = true;
};

void SaveManifest(const Manifest& manifest, const std::string& path);
Manifest LoadManifest(const std::string& path, const LoadOptions& options = {});

// Ids whose stored foreground_ratio differs from the ratio of the mask file.
std::vector<std::string> FindStaleRecords(const Manifest& manifest);

void AppendVerdict(const std::string& log_path, const VerdictEvent& event);
std::vector<VerdictEvent> LoadVerdictLog(const std::string& log_path);

void WriteHistogramCsv(const std::string& path, const Histogram& histogram);

}  // namespace refseg

#endif  // REFSEG_DATASET_H_
