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

#include "refseg/metrics.h"

#include <cinttypes>
#include <cstdio>
#include <filesystem>

#include "refseg/image_io.h"

namespace refseg {

namespace {

void RequireSamples(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kEmptySampleSet, "no samples to evaluate");
}

std::string Fixed4(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

std::string ThresholdLabel(double threshold) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "Pr@%g", threshold);
  return buffer;
}

}  // namespace

IouCounts CountIou(const BinaryMask& pred, const BinaryMask& gt) {
  if (!pred.SameDims(gt)) {
    throw Error(ErrorCode::kDimMismatch,
                "prediction " + std::to_string(pred.width) + "x" +
                    std::to_string(pred.height) + " vs ground truth " +
                    std::to_string(gt.width) + "x" + std::to_string(gt.height));
  }
  IouCounts counts;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0;
    const bool g = gt.bits[i] != 0;
    counts.intersection += (p && g) ? 1 : 0;
    counts.union_ += (p || g) ? 1 : 0;
  }
  return counts;
}

double Iou(const BinaryMask& pred, const BinaryMask& gt) {
  return CountIou(pred, gt).Iou();
}

double OverallIou(std::span<const IouCounts> counts) {
  RequireSamples(counts.size());
  std::int64_t intersection = 0;
  std::int64_t union_ = 0;
  for (const IouCounts& c : counts) {
    intersection += c.intersection;
    union_ += c.union_;
  }
  return IouCounts{intersection, union_}.Iou();
}

double MeanIou(std::span<const IouCounts> counts) {
  RequireSamples(counts.size());
  double sum = 0.0;
  for (const IouCounts& c : counts) sum += c.Iou();
  return sum / static_cast<double>(counts.size());
}

double PrecisionAt(std::span<const IouCounts> counts, double threshold,
                   bool inclusive) {
  RequireSamples(counts.size());
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1)");
  }
  std::int64_t hits = 0;
  for (const IouCounts& c : counts) {
    const double iou = c.Iou();
    if (inclusive ? iou >= threshold : iou > threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(counts.size());
}

EvalReport Summarize(std::span<const IouCounts> counts,
                     const std::vector<double>& thresholds, bool inclusive) {
  EvalReport report;
  for (double t : thresholds) report.pr[t] = PrecisionAt(counts, t, inclusive);
  report.oiou = OverallIou(counts);
  report.miou = MeanIou(counts);
  report.n = static_cast<std::int64_t>(counts.size());
  return report;
}

std::vector<IouCounts> CountAll(std::span<const EvalSample> samples) {
  std::vector<IouCounts> out;
  out.reserve(samples.size());
  for (const EvalSample& s : samples) {
    try {
      out.push_back(CountIou(s.pred, s.gt));
    } catch (const Error& e) {
      throw Error(e.code(), "sample '" + s.id + "': " + e.what());
    }
  }
  return out;
}

double OverallIou(std::span<const EvalSample> samples) {
  return OverallIou(std::span<const IouCounts>(CountAll(samples)));
}

double MeanIou(std::span<const EvalSample> samples) {
  return MeanIou(std::span<const IouCounts>(CountAll(samples)));
}

double PrecisionAt(std::span<const EvalSample> samples, double threshold,
                   bool inclusive) {
  return PrecisionAt(std::span<const IouCounts>(CountAll(samples)), threshold,
                     inclusive);
}

DirEvaluation EvaluateDirs(const std::string& pred_dir, const Manifest& manifest,
                           const EvaluateOptions& options) {
  DirEvaluation out;
  std::vector<IouCounts> counts;
  for (const TripletRecord& r : manifest.records) {
    if (r.verdict == Verdict::kDiscard) continue;
    if (options.split && r.split != *options.split) continue;
    const std::string pred_path =
        (std::filesystem::path(pred_dir) / (r.id + ".png")).string();
    if (!std::filesystem::exists(pred_path)) {
      throw Error(ErrorCode::kMissingPrediction,
                  "no prediction for '" + r.id + "' (expected " + pred_path + ")");
    }
    const BinaryMask pred = ReadMaskPng(pred_path);
    const BinaryMask gt = ReadMaskPng(manifest.Resolve(r.mask_path));
    IouCounts c;
    try {
      c = CountIou(pred, gt);
    } catch (const Error& e) {
      throw Error(e.code(), "'" + r.id + "': " + e.what());
    }
    counts.push_back(c);
    out.samples.push_back({r.id, c});
  }
  out.report = Summarize(counts, options.thresholds, options.inclusive);
  return out;
}

std::string FormatReportTable(const EvalReport& report, const std::string& label) {
  std::vector<std::string> headers = {"Method"};
  std::vector<std::string> cells = {label};
  for (const auto& [threshold, value] : report.pr) {
    headers.push_back(ThresholdLabel(threshold));
    cells.push_back(Fixed4(value));
  }
  headers.push_back("oIoU");
  cells.push_back(Fixed4(report.oiou));
  headers.push_back("mIoU");
  cells.push_back(Fixed4(report.miou));

  std::string header_line, cell_line;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const std::size_t width = std::max(headers[i].size(), cells[i].size());
    char buffer[128];
    std::snprintf(buffer, sizeof(buffer), "%-*s", static_cast<int>(width),
                  headers[i].c_str());
    header_line += (i ? "  " : "") + std::string(buffer);
    std::snprintf(buffer, sizeof(buffer), "%-*s", static_cast<int>(width),
                  cells[i].c_str());
    cell_line += (i ? "  " : "") + std::string(buffer);
  }
  for (std::string* line : {&header_line, &cell_line}) {
    line->erase(line->find_last_not_of(' ') + 1);
  }
  return header_line + "\n" + cell_line + "\n";
}

std::string FormatReportCsv(const EvalReport& report) {
  std::string header, row;
  for (const auto& [threshold, value] : report.pr) {
    header += ThresholdLabel(threshold) + ",";
    row += Fixed4(value) + ",";
  }
  header += "oIoU,mIoU,n\n";
  row += Fixed4(report.oiou) + "," + Fixed4(report.miou) + "," +
         std::to_string(report.n) + "\n";
  return header + row;
}

std::string FormatSampleCsv(std::span<const SampleResult> samples) {
  std::string out = "id,intersection,union,iou\n";
  char buffer[96];
  for (const SampleResult& s : samples) {
    std::snprintf(buffer, sizeof(buffer), ",%" PRId64 ",%" PRId64 ",%.6f\n",
                  s.counts.intersection, s.counts.union_, s.counts.Iou());
    out += s.id + buffer;
  }
  return out;
}

}  // namespace refseg
