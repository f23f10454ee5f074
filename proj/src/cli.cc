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

#include "refseg/cli.h"

#include <algorithm>
#include <array>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "refseg/dataset.h"
#include "refseg/error.h"
#include "refseg/exprgen.h"
#include "refseg/image_io.h"
#include "refseg/lgce_check.h"
#include "refseg/maskgen.h"
#include "refseg/metrics.h"
#include "refseg/raster.h"
#include "refseg/review_server.h"
#include "refseg/taxonomy.h"

namespace refseg {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Input problems that are not library errors (bad flag combinations,
// missing directories).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Values from the --config JSON document, looked up by dotted path.
class ConfigFile {
 public:
  void Load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    try {
      doc_ = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, path + ": " + e.what());
    }
    if (!doc_.is_object()) throw Error(ErrorCode::kParseError, path + ": not a JSON object");
    path_ = path;
  }

  // Assigns the config value to `target` unless the flag was given.
  template <typename T>
  void Fill(const CLI::Option* flag, const std::string& key, T& target) const {
    if (flag != nullptr && flag->count() > 0) return;
    const json* node = Find(key);
    if (node == nullptr) return;
    try {
      target = node->get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::kParseError, path_ + ": bad value for '" + key + "'");
    }
  }

 private:
  const json* Find(const std::string& key) const {
    const json* node = &doc_;
    std::stringstream parts(key);
    std::string part;
    while (std::getline(parts, part, '.')) {
      if (!node->is_object() || !node->contains(part)) return nullptr;
      node = &(*node)[part];
    }
    return node;
  }

  json doc_ = json::object();
  std::string path_;
};

struct Common {
  std::string config_path;
  std::string taxonomy_path;
  ConfigFile config;
  const CLI::Option* taxonomy_flag = nullptr;

  Taxonomy LoadTaxonomyOrDefault() {
    config.Fill(taxonomy_flag, "taxonomy", taxonomy_path);
    return taxonomy_path.empty() ? RefSegRsTaxonomy() : LoadTaxonomy(taxonomy_path);
  }
};

struct PredicateFlags {
  SpatialPredicateConfig cfg;
  std::map<std::string, CLI::Option*> flags;

  void Register(CLI::App* cmd) {
    flags["buffer_radius"] =
        cmd->add_option("--buffer-radius", cfg.buffer_radius, "Buffer radius in pixels");
    flags["tau_on"] = cmd->add_option("--tau-on", cfg.tau_on, "Containment threshold for 'on'");
    flags["tau_surround"] = cmd->add_option("--tau-surround", cfg.tau_surround,
                                            "Containment threshold for 'surrounded by'");
    flags["connectivity"] = cmd->add_option("--connectivity", cfg.connectivity,
                                            "Instance connectivity, 4 or 8");
  }
  void Merge(const ConfigFile& config) {
    config.Fill(flags["buffer_radius"], "predicates.buffer_radius", cfg.buffer_radius);
    config.Fill(flags["tau_on"], "predicates.tau_on", cfg.tau_on);
    config.Fill(flags["tau_surround"], "predicates.tau_surround", cfg.tau_surround);
    config.Fill(flags["connectivity"], "predicates.connectivity", cfg.connectivity);
    cfg.Validate();
  }
};

std::string Printf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Printf(const char* fmt, ...) {
  char buf[1024];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
}

// ---- tile ----

struct TileArgs {
  int width = 0, height = 0;
  std::string labels, image, out_dir, prefix = "tile", crops_csv;
  TileSpec spec;
};

int RunTile(TileArgs& a, Common& common, std::ostream& out) {
  a.spec.Validate();
  std::optional<LabelMap> labels;
  std::optional<RgbImage> image;
  if (!a.labels.empty()) {
    labels = LoadLabelMap(a.labels, common.LoadTaxonomyOrDefault());
    a.width = labels->width;
    a.height = labels->height;
    if (!a.image.empty()) {
      image = ReadRgbPng(a.image);
      if (image->width != a.width || image->height != a.height) {
        throw Error(ErrorCode::kDimMismatch, "image and label raster sizes differ");
      }
    }
  } else if (a.width <= 0 || a.height <= 0) {
    throw UsageError("tile needs --labels or positive --width and --height");
  }
  const std::vector<CropRect> crops = TileCrops(a.width, a.height, a.spec);
  std::string csv = "x,y,side\n";
  for (const CropRect& c : crops) csv += Printf("%d,%d,%d\n", c.x, c.y, c.side);
  if (!a.crops_csv.empty()) WriteText(a.crops_csv, csv);

  if (labels) {
    if (a.out_dir.empty()) throw UsageError("--out is required with --labels");
    for (std::size_t i = 0; i < crops.size(); ++i) {
      const fs::path dir = fs::path(a.out_dir) / Printf("%s_%03zu", a.prefix.c_str(), i);
      fs::create_directories(dir);
      WriteLabelPng((dir / "label.png").string(),
                    ResampleLabels(CropLabels(*labels, crops[i]), a.spec.output_side));
      if (image) {
        WriteRgbPng((dir / "image.png").string(),
                    ResampleImage(CropImage(*image, crops[i]), a.spec.output_side));
      }
    }
    out << Printf("%zu crops of %dx%d written to %s\n", crops.size(), a.spec.output_side,
                  a.spec.output_side, a.out_dir.c_str());
  } else {
    out << Printf("%zu crops (window %d, stride %d) over %dx%d\n", crops.size(),
                  a.spec.window, a.spec.stride, a.width, a.height);
    if (a.crops_csv.empty()) out << csv;
  }
  return kExitOk;
}

// ---- generate ----

struct GenerateArgs {
  std::string scenes, out_dir;
  bool force = false;
  int workers = 1;
  PredicateFlags predicates;
  CLI::Option *scenes_flag = nullptr, *out_flag = nullptr, *workers_flag = nullptr;
};

std::vector<Scene> ReadScenes(const std::string& dir, const Taxonomy& taxonomy) {
  if (!fs::is_directory(dir)) throw UsageError("scene directory '" + dir + "' not found");
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "label.png")) entries.push_back(e.path());
  }
  std::sort(entries.begin(), entries.end());
  if (entries.empty()) {
    throw UsageError("no scenes (<id>/label.png) found in '" + dir + "'");
  }
  std::vector<Scene> scenes;
  for (const fs::path& p : entries) {
    Scene s{p.filename().string(), LoadLabelMap((p / "label.png").string(), taxonomy), {}};
    if (fs::exists(p / "image.png")) {
      s.image = ReadRgbPng((p / "image.png").string());
      if (s.image->width != s.labels.width || s.image->height != s.labels.height) {
        throw Error(ErrorCode::kDimMismatch,
                    "scene '" + s.scene_id + "': image and label sizes differ");
      }
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

int RunGenerate(GenerateArgs& a, Common& common, std::ostream& out) {
  common.config.Fill(a.scenes_flag, "scenes", a.scenes);
  common.config.Fill(a.out_flag, "output", a.out_dir);
  common.config.Fill(a.workers_flag, "workers", a.workers);
  a.predicates.Merge(common.config);
  if (a.scenes.empty() || a.out_dir.empty()) throw UsageError("--scenes and --out are required");
  if (a.workers < 1) throw UsageError("--workers must be >= 1");

  const fs::path root(a.out_dir);
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!a.force) {
      throw UsageError("output directory '" + a.out_dir +
                       "' is not empty; pass --force to overwrite");
    }
    for (const char* sub : {"images", "labels", "masks", "manifest.jsonl"}) {
      fs::remove_all(root / sub);
    }
  }
  const Taxonomy taxonomy = common.LoadTaxonomyOrDefault();
  const std::vector<Scene> scenes = ReadScenes(a.scenes, taxonomy);
  AssembleSummary summary;
  Manifest manifest =
      Assemble(scenes, taxonomy, a.predicates.cfg, {a.out_dir, a.workers}, &summary);
  manifest.cfg_snapshot.taxonomy_hash = TaxonomyHash(taxonomy);
  ValidateManifest(manifest);
  SaveManifest(manifest, (root / "manifest.jsonl").string());
  out << Printf("scenes %d, triplets %d, dropped empty %d\n", summary.scenes,
                summary.triplets, summary.dropped_empty);
  return kExitOk;
}

// ---- split ----

struct SplitArgs {
  std::string manifest, out;
  std::vector<double> fractions{kDefaultSplitFractions.begin(), kDefaultSplitFractions.end()};
  std::uint64_t seed = 0;
  CLI::Option *fractions_flag = nullptr, *seed_flag = nullptr;
};

int RunSplit(SplitArgs& a, Common& common, std::ostream& out) {
  common.config.Fill(a.fractions_flag, "split.fractions", a.fractions);
  common.config.Fill(a.seed_flag, "split.seed", a.seed);
  if (a.fractions.size() != 3) throw UsageError("--fractions takes three values");
  const Manifest m = LoadManifest(a.manifest);
  const Manifest split =
      SplitByScene(m, {a.fractions[0], a.fractions[1], a.fractions[2]}, a.seed);
  ValidateManifest(split);
  SaveManifest(split, a.out.empty() ? a.manifest : a.out);
  std::map<Split, std::pair<std::set<std::string>, int>> counts;
  for (const TripletRecord& r : split.records) {
    counts[r.split].first.insert(r.scene_id);
    ++counts[r.split].second;
  }
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    out << Printf("%-5s scenes %4zu  triplets %6d\n", std::string(SplitName(s)).c_str(),
                  counts[s].first.size(), counts[s].second);
  }
  return kExitOk;
}

// ---- stats ----

struct StatsArgs {
  std::string manifest, csv;
  double bin_width = 0.05;
  int words = 0;
  CLI::Option* bin_flag = nullptr;
};

int RunStats(StatsArgs& a, Common& common, std::ostream& out) {
  common.config.Fill(a.bin_flag, "bin_width", a.bin_width);
  const Manifest m = LoadManifest(a.manifest, {.check_files = false});
  if (m.records.empty()) throw Error(ErrorCode::kEmptySampleSet, "manifest has no records");
  const Histogram h = ForegroundHistogram(m, a.bin_width);
  const std::string csv = a.csv.empty()
                              ? (fs::path(a.manifest).parent_path() / "foreground_histogram.csv")
                                    .string()
                              : a.csv;
  WriteHistogramCsv(csv, h);
  const std::int64_t peak = *std::max_element(h.counts.begin(), h.counts.end());
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const int bar = peak == 0 ? 0 : static_cast<int>((h.counts[i] * 50 + peak - 1) / peak);
    out << Printf("[%.3f, %.3f%c %6lld  %s\n", h.bin_edges[i], h.bin_edges[i + 1],
                  i + 1 == h.counts.size() ? ']' : ')',
                  static_cast<long long>(h.counts[i]), std::string(bar, '#').c_str());
  }
  out << "histogram written to " << csv << "\n";
  if (a.words > 0) {
    std::vector<std::string> texts;
    for (const TripletRecord& r : m.records) texts.push_back(r.expression.text);
    const auto counts = WordCloudCounts(texts);
    for (std::size_t i = 0; i < counts.size() && i < static_cast<std::size_t>(a.words); ++i) {
      out << Printf("%-16s %d\n", counts[i].first.c_str(), counts[i].second);
    }
  }
  return kExitOk;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string pred_dir, manifest, out_dir, split = "test", label = "prediction";
  std::vector<double> thresholds = kDefaultThresholds;
  bool inclusive = false;
  CLI::Option* thresholds_flag = nullptr;
};

int RunEvaluate(EvaluateArgs& a, Common& common, std::ostream& out) {
  common.config.Fill(a.thresholds_flag, "thresholds", a.thresholds);
  EvaluateOptions opts;
  opts.thresholds = a.thresholds;
  opts.inclusive = a.inclusive;
  if (a.split == "all") {
    opts.split = std::nullopt;
  } else {
    opts.split = SplitFromName(a.split);
    if (!opts.split) throw UsageError("unknown split '" + a.split + "'");
  }
  const Manifest m = LoadManifest(a.manifest);
  const DirEvaluation eval = EvaluateDirs(a.pred_dir, m, opts);
  out << FormatReportTable(eval.report, a.label);
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    WriteText((fs::path(a.out_dir) / "report.csv").string(), FormatReportCsv(eval.report));
    WriteText((fs::path(a.out_dir) / "samples.csv").string(), FormatSampleCsv(eval.samples));
  }
  return kExitOk;
}

// ---- lgce-check ----

struct LgceCheckArgs {
  nn::LgceCheckOptions opts;
  std::string residual = "full-sequence";
  bool verbose_timing = false;
};

int RunLgceCheck(LgceCheckArgs& a, std::ostream& out) {
  a.opts.fixture.residual = nn::ResidualModeFromName(a.residual);
  a.opts.fixture.Validate();
  const auto results = nn::RunLgceChecks(a.opts);
  out << nn::FormatCheckTable(results);
  if (a.verbose_timing) {
    for (const auto& r : results) out << Printf("%-22s %.3fs\n", r.name.c_str(), r.seconds);
  }
  const bool ok = nn::AllPassed(results);
  out << (ok ? "all checks passed\n" : "checks FAILED\n");
  return ok ? kExitOk : kExitCheckFailed;
}

// ---- serve / export ----

struct ServeArgs {
  ReviewOptions review;
  ServeOptions serve;
  CLI::Option *port_flag = nullptr, *static_flag = nullptr;
};

int RunServe(ServeArgs& a, Common& common, std::ostream& out) {
  common.config.Fill(a.port_flag, "port", a.serve.port);
  common.config.Fill(a.static_flag, "static_dir", a.serve.static_dir);
  auto service = std::make_shared<ReviewService>(a.review);
  ReviewServer server(service, a.serve);
  const int port = server.Bind();
  out << Printf("serving %zu triplets on http://%s:%d (verdicts: %s)\n",
                service->Snapshot().records.size(), a.serve.host.c_str(), port,
                service->options().verdict_log.c_str());
  out.flush();
  server.Run();
  return kExitOk;
}

struct ExportArgs {
  std::string manifest, log, out;
  bool include_pending = false;
};

int RunExport(ExportArgs& a, std::ostream& out) {
  const Manifest m = LoadManifest(a.manifest);
  const std::string log = a.log.empty() ? a.manifest + ".verdicts.jsonl" : a.log;
  const Manifest view = ExportView(ApplyVerdicts(m, LoadVerdictLog(log)), a.include_pending);
  ValidateManifest(view);
  SaveManifest(view, a.out);
  out << Printf("%zu of %zu records exported to %s\n", view.records.size(), m.records.size(),
                a.out.c_str());
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Referring-segmentation dataset toolkit", "refseg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "refseg 0.1.0");
  Common common;
  app.add_option("--config", common.config_path, "JSON config file (flags take precedence)")
      ->check(CLI::ExistingFile);
  common.taxonomy_flag =
      app.add_option("--taxonomy", common.taxonomy_path,
                     "Taxonomy JSON (default: built-in RefSegRS taxonomy)");

  TileArgs tile;
  CLI::App* tile_cmd = app.add_subcommand("tile", "Sliding-window crops of a large raster");
  tile_cmd->add_option("--width", tile.width, "Raster width when no --labels is given");
  tile_cmd->add_option("--height", tile.height, "Raster height when no --labels is given");
  tile_cmd->add_option("--labels", tile.labels, "Label raster to crop")->check(CLI::ExistingFile);
  tile_cmd->add_option("--image", tile.image, "Matching RGB image")->check(CLI::ExistingFile);
  tile_cmd->add_option("--out", tile.out_dir, "Scene directory to write crops into");
  tile_cmd->add_option("--prefix", tile.prefix, "Scene id prefix");
  tile_cmd->add_option("--window", tile.spec.window, "Window side in pixels");
  tile_cmd->add_option("--stride", tile.spec.stride, "Stride in pixels");
  tile_cmd->add_option("--output-side", tile.spec.output_side, "Resampled side in pixels");
  tile_cmd->add_option("--crops-csv", tile.crops_csv, "Write crop rectangles as x,y,side");

  GenerateArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("generate", "Generate triplets and masks");
  gen.scenes_flag = gen_cmd->add_option("--scenes", gen.scenes, "Directory of <id>/label.png");
  gen.out_flag = gen_cmd->add_option("--out", gen.out_dir, "Output dataset directory");
  gen.workers_flag = gen_cmd->add_option("--workers", gen.workers, "Worker threads");
  gen_cmd->add_flag("--force", gen.force, "Overwrite an existing output directory");
  gen.predicates.Register(gen_cmd);

  SplitArgs split;
  CLI::App* split_cmd = app.add_subcommand("split", "Assign scene-disjoint splits");
  split_cmd->add_option("--manifest", split.manifest, "Manifest to split")->required();
  split_cmd->add_option("--out", split.out, "Output manifest (default: in place)");
  split.fractions_flag =
      split_cmd->add_option("--fractions", split.fractions, "Train, val, test fractions")
          ->expected(3)
          ->delimiter(',');
  split.seed_flag = split_cmd->add_option("--seed", split.seed, "Shuffle seed");

  StatsArgs stats;
  CLI::App* stats_cmd = app.add_subcommand("stats", "Foreground-proportion histogram");
  stats_cmd->add_option("--manifest", stats.manifest, "Manifest")->required();
  stats.bin_flag = stats_cmd->add_option("--bin-width", stats.bin_width, "Histogram bin width");
  stats_cmd->add_option("--csv", stats.csv, "CSV output path");
  stats_cmd->add_option("--words", stats.words, "Also print the N most frequent words");

  EvaluateArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Score predicted masks");
  eval_cmd->add_option("--pred", eval.pred_dir, "Directory of <id>.png predictions")
      ->required();
  eval_cmd->add_option("--manifest", eval.manifest, "Manifest")->required();
  eval_cmd->add_option("--split", eval.split, "train, val, test or all");
  eval.thresholds_flag =
      eval_cmd->add_option("--thresholds", eval.thresholds, "Precision thresholds")
          ->delimiter(',');
  eval_cmd->add_flag("--inclusive", eval.inclusive, "Count IoU equal to a threshold as a hit");
  eval_cmd->add_option("--label", eval.label, "Row label in the table");
  eval_cmd->add_option("--out", eval.out_dir, "Directory for report.csv and samples.csv");

  LgceCheckArgs lgce;
  CLI::App* lgce_cmd = app.add_subcommand("lgce-check", "Run the LGCE invariant suite");
  lgce_cmd->add_option("--seed", lgce.opts.seed, "Base seed");
  lgce_cmd->add_option("--trials", lgce.opts.shape_trials, "Random configs for shape checks");
  lgce_cmd->add_option("--grad-seeds", lgce.opts.grad_seeds, "Seeds for gradient checks");
  lgce_cmd->add_option("--residual", lgce.residual, "full-sequence or language-only");
  lgce_cmd->add_flag("--timing", lgce.verbose_timing, "Print per-check timing");
  lgce_cmd->add_flag("--inject-gradient-fault", lgce.opts.inject_gradient_fault)
      ->group("");  // test hook, hidden from help

  ServeArgs serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Run the curation server");
  serve_cmd->add_option("--manifest", serve.review.manifest_path, "Manifest")->required();
  serve_cmd->add_option("--log", serve.review.verdict_log, "Verdict log path");
  serve_cmd->add_option("--export-path", serve.review.export_path, "Filtered manifest path");
  serve_cmd->add_option("--host", serve.serve.host, "Bind address");
  serve.port_flag = serve_cmd->add_option("--port", serve.serve.port, "Port");
  serve.static_flag =
      serve_cmd->add_option("--static", serve.serve.static_dir, "Review UI build directory");

  ExportArgs exp;
  CLI::App* export_cmd = app.add_subcommand("export", "Apply the verdict log offline");
  export_cmd->add_option("--manifest", exp.manifest, "Manifest")->required();
  export_cmd->add_option("--log", exp.log, "Verdict log (default: <manifest>.verdicts.jsonl)");
  export_cmd->add_option("--out", exp.out, "Output manifest")->required();
  export_cmd->add_flag("--include-pending", exp.include_pending, "Keep unreviewed records");

  CLI::App* tax_cmd = app.add_subcommand(
      "taxonomy", "Validate the taxonomy and print its canonical JSON form");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (!common.config_path.empty()) common.config.Load(common.config_path);
    if (tile_cmd->parsed()) return RunTile(tile, common, out);
    if (gen_cmd->parsed()) return RunGenerate(gen, common, out);
    if (split_cmd->parsed()) return RunSplit(split, common, out);
    if (stats_cmd->parsed()) return RunStats(stats, common, out);
    if (eval_cmd->parsed()) return RunEvaluate(eval, common, out);
    if (lgce_cmd->parsed()) return RunLgceCheck(lgce, out);
    if (serve_cmd->parsed()) return RunServe(serve, common, out);
    if (export_cmd->parsed()) return RunExport(exp, out);
    if (tax_cmd->parsed()) {
      out << SerializeTaxonomy(common.LoadTaxonomyOrDefault());
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace refseg
