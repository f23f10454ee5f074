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

#include "refseg/dataset.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "json.hpp"
#include "refseg/image_io.h"

namespace refseg {

namespace fs = std::filesystem;

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Uniform integer in [0, n) by rejection, so the sequence depends only on
// the mt19937_64 stream and not on the standard library's distributions.
std::uint64_t BoundedRandom(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

std::string HashHex(std::uint64_t hash) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016" PRIx64, hash);
  return buffer;
}

void CheckSceneId(const std::string& id) {
  if (id.empty() || id.find_first_of("/\\ \t\n") != std::string::npos ||
      id == "." || id == "..") {
    throw Error(ErrorCode::kInvalidArgument,
                "scene id '" + id + "' must be non-empty without slashes or spaces");
  }
}

double ForegroundRatio(const BinaryMask& mask) {
  return mask.size() == 0 ? 0.0
                          : static_cast<double>(mask.Count()) /
                                static_cast<double>(mask.size());
}

ordered_json RecordToJson(const TripletRecord& r) {
  ordered_json expression;
  expression["text"] = r.expression.text;
  expression["category"] = r.expression.category;
  expression["attribute"] =
      r.expression.attribute ? ordered_json(*r.expression.attribute) : ordered_json();
  expression["relation"] =
      r.expression.relation ? ordered_json(*r.expression.relation) : ordered_json();
  ordered_json j;
  j["id"] = r.id;
  j["scene_id"] = r.scene_id;
  j["image_path"] = r.image_path;
  j["label_path"] = r.label_path;
  j["mask_path"] = r.mask_path;
  j["expression"] = std::move(expression);
  j["split"] = SplitName(r.split);
  j["foreground_ratio"] = r.foreground_ratio;
  j["verdict"] = VerdictName(r.verdict);
  return j;
}

std::string GetString(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw std::runtime_error(std::string("field '") + key + "' missing or not a string");
  }
  return j.at(key).get<std::string>();
}

std::optional<std::string> GetOptionalString(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) {
    throw std::runtime_error(std::string("field '") + key + "' must be a string or null");
  }
  return j.at(key).get<std::string>();
}

TripletRecord RecordFromJson(const json& j) {
  if (!j.is_object()) throw std::runtime_error("record must be an object");
  TripletRecord r;
  r.id = GetString(j, "id");
  r.scene_id = GetString(j, "scene_id");
  r.image_path = GetString(j, "image_path");
  r.label_path = GetString(j, "label_path");
  r.mask_path = GetString(j, "mask_path");
  if (!j.contains("expression") || !j.at("expression").is_object()) {
    throw std::runtime_error("field 'expression' missing or not an object");
  }
  const json& e = j.at("expression");
  r.expression.text = GetString(e, "text");
  r.expression.category = GetString(e, "category");
  r.expression.attribute = GetOptionalString(e, "attribute");
  r.expression.relation = GetOptionalString(e, "relation");
  const auto split = SplitFromName(GetString(j, "split"));
  if (!split) throw std::runtime_error("unknown split value");
  r.split = *split;
  const auto verdict = VerdictFromName(GetString(j, "verdict"));
  if (!verdict) throw std::runtime_error("unknown verdict value");
  r.verdict = *verdict;
  if (!j.contains("foreground_ratio") || !j.at("foreground_ratio").is_number()) {
    throw std::runtime_error("field 'foreground_ratio' missing or not a number");
  }
  r.foreground_ratio = j.at("foreground_ratio").get<double>();
  if (!(r.foreground_ratio >= 0.0 && r.foreground_ratio <= 1.0)) {
    throw std::runtime_error("foreground_ratio outside [0, 1]");
  }
  return r;
}

void WriteFileAtomically(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + tmp + "'");
    out << contents;
    if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot replace '" + path + "': " + ec.message());
}

}  // namespace

std::string SerializeRecord(const TripletRecord& record) {
  return RecordToJson(record).dump();
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kUnassigned: return "unassigned";
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "unassigned";
}

std::optional<Split> SplitFromName(std::string_view name) {
  if (name == "unassigned") return Split::kUnassigned;
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

std::string_view VerdictName(Verdict verdict) {
  switch (verdict) {
    case Verdict::kPending: return "pending";
    case Verdict::kKeep: return "keep";
    case Verdict::kDiscard: return "discard";
  }
  return "pending";
}

std::optional<Verdict> VerdictFromName(std::string_view name) {
  if (name == "pending") return Verdict::kPending;
  if (name == "keep") return Verdict::kKeep;
  if (name == "discard") return Verdict::kDiscard;
  return std::nullopt;
}

const TripletRecord* Manifest::Find(std::string_view id) const {
  for (const TripletRecord& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::string Manifest::Resolve(const std::string& relative_path) const {
  if (root.empty() || fs::path(relative_path).is_absolute()) return relative_path;
  return (fs::path(root) / relative_path).string();
}

std::string TripletId(std::string_view scene_id, std::string_view text) {
  std::string slug(text);
  std::replace(slug.begin(), slug.end(), ' ', '_');
  return std::string(scene_id) + "/" + slug;
}

std::vector<GeneratedTriplet> BuildSceneTriplets(const std::string& scene_id,
                                                 const LabelMap& labels,
                                                 const Taxonomy& taxonomy,
                                                 const SpatialPredicateConfig& cfg,
                                                 int* dropped_empty) {
  std::vector<GeneratedTriplet> out;
  int dropped = 0;
  for (Expression& e : EnumerateExpressions(taxonomy)) {
    BinaryMask mask = GenerateMask(labels, taxonomy, e, cfg);
    if (mask.Count() == 0) {
      ++dropped;
      continue;
    }
    GeneratedTriplet t;
    t.record.id = TripletId(scene_id, e.text);
    t.record.scene_id = scene_id;
    t.record.image_path = "images/" + scene_id + ".png";
    t.record.label_path = "labels/" + scene_id + ".png";
    t.record.mask_path = "masks/" + t.record.id + ".png";
    t.record.foreground_ratio = ForegroundRatio(mask);
    t.record.expression = std::move(e);
    t.mask = std::move(mask);
    out.push_back(std::move(t));
  }
  if (dropped_empty != nullptr) *dropped_empty = dropped;
  return out;
}

RgbImage RenderLabelPalette(const LabelMap& labels) {
  static constexpr std::uint8_t kPalette[20][3] = {
      {120, 170, 80},  {128, 128, 128}, {160, 140, 110}, {90, 90, 140},
      {140, 120, 170}, {200, 60, 60},   {220, 200, 160}, {250, 160, 40},
      {240, 80, 200},  {255, 255, 255}, {180, 40, 40},   {30, 120, 230},
      {60, 200, 200},  {80, 80, 255},   {255, 120, 0},   {200, 100, 0},
      {255, 220, 0},   {70, 70, 70},    {190, 190, 170}, {20, 100, 30}};
  RgbImage image;
  image.width = labels.width;
  image.height = labels.height;
  image.rgb.resize(labels.pixels.size() * 3);
  for (std::size_t i = 0; i < labels.pixels.size(); ++i) {
    const int id = labels.pixels[i];
    for (int k = 0; k < 3; ++k) {
      image.rgb[i * 3 + k] =
          id < 20 ? kPalette[id][k] : static_cast<std::uint8_t>((id * 37 + k * 91) & 0xff);
    }
  }
  return image;
}

Manifest Assemble(const std::vector<Scene>& scenes, const Taxonomy& taxonomy,
                  const SpatialPredicateConfig& cfg, const AssembleOptions& options,
                  AssembleSummary* summary) {
  if (scenes.empty()) throw Error(ErrorCode::kInvalidArgument, "no scenes to assemble");
  cfg.Validate();
  std::set<std::string> seen;
  for (const Scene& s : scenes) {
    CheckSceneId(s.scene_id);
    if (!seen.insert(s.scene_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate scene id '" + s.scene_id + "'");
    }
  }

  const fs::path root(options.output_dir);
  std::error_code ec;
  for (const char* sub : {"images", "labels", "masks"}) {
    fs::create_directories(root / sub, ec);
    if (ec) {
      throw Error(ErrorCode::kIoError,
                  "cannot create '" + (root / sub).string() + "': " + ec.message());
    }
  }

  std::vector<std::vector<TripletRecord>> per_scene(scenes.size());
  std::vector<int> dropped(scenes.size(), 0);
  std::vector<std::string> failures(scenes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < scenes.size(); i = next++) {
      const Scene& scene = scenes[i];
      try {
        WriteLabelPng((root / "labels" / (scene.scene_id + ".png")).string(),
                      scene.labels);
        WriteRgbPng((root / "images" / (scene.scene_id + ".png")).string(),
                    scene.image ? *scene.image : RenderLabelPalette(scene.labels));
        fs::create_directories(root / "masks" / scene.scene_id);
        for (GeneratedTriplet& t : BuildSceneTriplets(
                 scene.scene_id, scene.labels, taxonomy, cfg, &dropped[i])) {
          WriteMaskPng((root / t.record.mask_path).string(), t.mask);
          per_scene[i].push_back(std::move(t.record));
        }
      } catch (const std::exception& e) {
        failures[i] = "scene '" + scene.scene_id + "': " + e.what();
      }
    }
  };
  const int workers = std::max(1, options.workers);
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  for (const std::string& f : failures) {
    if (!f.empty()) throw Error(ErrorCode::kIoError, f);
  }

  Manifest manifest;
  manifest.root = options.output_dir;
  manifest.cfg_snapshot = {cfg, TaxonomyHash(taxonomy)};
  AssembleSummary totals;
  totals.scenes = static_cast<int>(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    totals.dropped_empty += dropped[i];
    for (TripletRecord& r : per_scene[i]) manifest.records.push_back(std::move(r));
  }
  totals.triplets = static_cast<int>(manifest.records.size());
  if (summary != nullptr) *summary = totals;
  return manifest;
}

std::array<int, 3> AllocateSceneCounts(int scenes, std::array<double, 3> fractions) {
  double sum = 0.0;
  int nonzero = 0;
  for (double f : fractions) {
    if (!(f >= 0.0) || !std::isfinite(f)) {
      throw Error(ErrorCode::kInvalidArgument, "split fractions must be non-negative");
    }
    sum += f;
    if (f > 0.0) ++nonzero;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "split fractions must sum to 1");
  }
  if (scenes < nonzero) {
    throw Error(ErrorCode::kTooFewScenes,
                std::to_string(scenes) + " scenes cannot fill " +
                    std::to_string(nonzero) + " non-empty splits");
  }

  std::array<int, 3> counts{};
  std::array<double, 3> remainder{};
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fractions[i] * scenes;
    counts[i] = static_cast<int>(std::floor(exact + 1e-9));
    remainder[i] = exact - counts[i];
    assigned += counts[i];
  }
  for (; assigned < scenes; ++assigned) {
    int best = -1;
    for (int i = 0; i < 3; ++i) {
      // Equal remainders (up to rounding noise) go to the earlier split.
      if (fractions[i] > 0.0 && (best < 0 || remainder[i] > remainder[best] + 1e-9)) {
        best = i;
      }
    }
    ++counts[best];
    remainder[best] = -1.0;
  }
  // A split that was asked for must not come out empty.
  for (int i = 0; i < 3; ++i) {
    if (fractions[i] > 0.0 && counts[i] == 0) {
      const int donor = static_cast<int>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      --counts[donor];
      ++counts[i];
    }
  }
  return counts;
}

Manifest SplitByScene(const Manifest& manifest, std::array<double, 3> fractions,
                      std::uint64_t seed) {
  std::set<std::string> unique;
  for (const TripletRecord& r : manifest.records) unique.insert(r.scene_id);
  std::vector<std::string> scenes(unique.begin(), unique.end());
  const std::array<int, 3> counts =
      AllocateSceneCounts(static_cast<int>(scenes.size()), fractions);

  std::mt19937_64 rng(seed);
  for (std::size_t i = scenes.size(); i > 1; --i) {
    std::swap(scenes[i - 1], scenes[BoundedRandom(rng, i)]);
  }
  std::map<std::string, Split> assignment;
  std::size_t pos = 0;
  const Split order[3] = {Split::kTrain, Split::kVal, Split::kTest};
  for (int k = 0; k < 3; ++k) {
    for (int n = 0; n < counts[k]; ++n) assignment[scenes[pos++]] = order[k];
  }

  Manifest out = manifest;
  for (TripletRecord& r : out.records) r.split = assignment.at(r.scene_id);
  return out;
}

Manifest ApplyVerdicts(const Manifest& manifest,
                       std::span<const VerdictEvent> verdict_log) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    index.emplace(manifest.records[i].id, i);
  }
  Manifest out = manifest;
  for (const VerdictEvent& event : verdict_log) {
    const auto it = index.find(event.id);
    if (it == index.end()) {
      throw Error(ErrorCode::kUnknownTripletId, "unknown triplet id '" + event.id + "'");
    }
    out.records[it->second].verdict = event.verdict;
  }
  return out;
}

Manifest ExportView(const Manifest& manifest, bool include_pending) {
  Manifest out = manifest;
  out.records.clear();
  for (const TripletRecord& r : manifest.records) {
    if (r.verdict == Verdict::kDiscard) continue;
    if (r.verdict == Verdict::kPending && !include_pending) continue;
    out.records.push_back(r);
  }
  return out;
}

Histogram BinRatios(std::span<const double> ratios, double bin_width) {
  if (!(bin_width > 0.0 && bin_width <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bin width must lie in (0, 1]");
  }
  const int bins = std::max(1, static_cast<int>(std::ceil(1.0 / bin_width - 1e-9)));
  Histogram h;
  for (int i = 0; i < bins; ++i) h.bin_edges.push_back(i * bin_width);
  h.bin_edges.push_back(1.0);
  h.counts.assign(bins, 0);
  for (double r : ratios) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "ratio outside [0, 1]");
    }
    // The tolerance keeps ratios that sit on a decimal edge (0.3 with width
    // 0.1) in the bin that edge opens.
    const int bin = static_cast<int>(std::floor(r / bin_width + 1e-9));
    ++h.counts[std::clamp(bin, 0, bins - 1)];
  }
  return h;
}

Histogram ForegroundHistogram(const Manifest& manifest, double bin_width) {
  std::vector<double> ratios;
  ratios.reserve(manifest.records.size());
  for (const TripletRecord& r : manifest.records) ratios.push_back(r.foreground_ratio);
  return BinRatios(ratios, bin_width);
}

void ValidateManifest(const Manifest& manifest) {
  std::set<std::string> ids;
  std::map<std::string, Split> scene_split;
  for (const TripletRecord& r : manifest.records) {
    if (!ids.insert(r.id).second) {
      throw Error(ErrorCode::kDuplicateTripletId, "duplicate triplet id '" + r.id + "'");
    }
    const auto [it, inserted] = scene_split.emplace(r.scene_id, r.split);
    if (!inserted && it->second != r.split) {
      throw Error(ErrorCode::kSplitOverlap,
                  "scene '" + r.scene_id + "' appears in splits '" +
                      std::string(SplitName(it->second)) + "' and '" +
                      std::string(SplitName(r.split)) + "'");
    }
  }
}

void SaveManifest(const Manifest& manifest, const std::string& path) {
  ValidateManifest(manifest);
  ordered_json header;
  header["format"] = "refseg-manifest";
  header["version"] = 1;
  ordered_json cfg;
  cfg["buffer_radius"] = manifest.cfg_snapshot.predicates.buffer_radius;
  cfg["tau_on"] = manifest.cfg_snapshot.predicates.tau_on;
  cfg["tau_surround"] = manifest.cfg_snapshot.predicates.tau_surround;
  cfg["connectivity"] = manifest.cfg_snapshot.predicates.connectivity;
  header["config"] = std::move(cfg);
  header["taxonomy_hash"] = HashHex(manifest.cfg_snapshot.taxonomy_hash);

  std::string contents = header.dump() + "\n";
  for (const TripletRecord& r : manifest.records) {
    contents += RecordToJson(r).dump() + "\n";
  }
  WriteFileAtomically(path, contents);
}

Manifest LoadManifest(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open manifest '" + path + "'");
  Manifest manifest;
  manifest.root = fs::path(path).parent_path().string();

  std::string line;
  int line_number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        if (!j.is_object() || j.value("format", "") != "refseg-manifest") {
          throw std::runtime_error("missing manifest header");
        }
        const json& cfg = j.at("config");
        SpatialPredicateConfig& p = manifest.cfg_snapshot.predicates;
        p.buffer_radius = cfg.at("buffer_radius").get<int>();
        p.tau_on = cfg.at("tau_on").get<double>();
        p.tau_surround = cfg.at("tau_surround").get<double>();
        p.connectivity = cfg.at("connectivity").get<int>();
        manifest.cfg_snapshot.taxonomy_hash =
            std::stoull(j.at("taxonomy_hash").get<std::string>(), nullptr, 16);
        have_header = true;
        continue;
      }
      manifest.records.push_back(RecordFromJson(j));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParseError, path + ": line " +
                                              std::to_string(line_number) + ": " +
                                              e.what());
    }
  }
  if (!have_header) {
    throw Error(ErrorCode::kParseError, path + ": line 1: missing manifest header");
  }
  ValidateManifest(manifest);
  if (options.check_files) {
    for (const TripletRecord& r : manifest.records) {
      if (!fs::exists(manifest.Resolve(r.mask_path))) {
        throw Error(ErrorCode::kMissingMaskFile,
                    "mask for '" + r.id + "' not found at '" +
                        manifest.Resolve(r.mask_path) + "'");
      }
    }
  }
  return manifest;
}

std::vector<std::string> FindStaleRecords(const Manifest& manifest) {
  std::vector<std::string> stale;
  for (const TripletRecord& r : manifest.records) {
    const BinaryMask mask = ReadMaskPng(manifest.Resolve(r.mask_path));
    if (ForegroundRatio(mask) != r.foreground_ratio) stale.push_back(r.id);
  }
  return stale;
}

void AppendVerdict(const std::string& log_path, const VerdictEvent& event) {
  ordered_json j;
  j["id"] = event.id;
  j["verdict"] = VerdictName(event.verdict);
  if (!event.reason.empty()) j["reason"] = event.reason;
  j["timestamp"] = event.timestamp;
  const std::string line = j.dump() + "\n";

  const int fd = ::open(log_path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) throw Error(ErrorCode::kIoError, "cannot open verdict log '" + log_path + "'");
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      ::close(fd);
      throw Error(ErrorCode::kIoError, "cannot append to '" + log_path + "'");
    }
    written += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error(ErrorCode::kIoError, "fsync failed for '" + log_path + "'");
}

std::vector<VerdictEvent> LoadVerdictLog(const std::string& log_path) {
  std::vector<VerdictEvent> events;
  std::ifstream in(log_path, std::ios::binary);
  if (!in) return events;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      VerdictEvent e;
      e.id = GetString(j, "id");
      const auto verdict = VerdictFromName(GetString(j, "verdict"));
      if (!verdict) throw std::runtime_error("unknown verdict value");
      e.verdict = *verdict;
      e.reason = GetOptionalString(j, "reason").value_or("");
      e.timestamp = j.value("timestamp", std::int64_t{0});
      events.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::kParseError, log_path + ": line " +
                                              std::to_string(line_number) + ": " +
                                              ex.what());
    }
  }
  return events;
}

void WriteHistogramCsv(const std::string& path, const Histogram& histogram) {
  std::string contents = "bin_start,bin_end,count\n";
  char buffer[96];
  for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
    std::snprintf(buffer, sizeof(buffer), "%.6g,%.6g,%" PRId64 "\n",
                  histogram.bin_edges[i], histogram.bin_edges[i + 1],
                  histogram.counts[i]);
    contents += buffer;
  }
  WriteFileAtomically(path, contents);
}

}  // namespace refseg
