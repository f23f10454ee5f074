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

#ifndef REFSEG_METRICS_H_
#define REFSEG_METRICS_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "refseg/dataset.h"
#include "refseg/raster.h"

namespace refseg {

struct EvalSample {
  BinaryMask pred;
  BinaryMask gt;
  std::string id;
};

// Exact pixel counts for one prediction / ground-truth pair.
struct IouCounts {
  std::int64_t intersection = 0;
  std::int64_t union_ = 0;

  // Both empty counts as a perfect match; exactly one empty gives 0.
  double Iou() const {
    return union_ == 0 ? 1.0
                       : static_cast<double>(intersection) /
                             static_cast<double>(union_);
  }
  bool operator==(const IouCounts&) const = default;
};

inline const std::vector<double> kDefaultThresholds = {0.5, 0.6, 0.7, 0.8, 0.9};

// Precision keys are the thresholds as given; iteration order is ascending.
struct EvalReport {
  std::map<double, double> pr;
  double oiou = 0.0;
  double miou = 0.0;
  std::int64_t n = 0;
};

IouCounts CountIou(const BinaryMask& pred, const BinaryMask& gt);
double Iou(const BinaryMask& pred, const BinaryMask& gt);

// Reductions over per-sample counts; each throws EmptySampleSet on empty
// input.
double OverallIou(std::span<const IouCounts> counts);
double MeanIou(std::span<const IouCounts> counts);
// Fraction of samples whose IoU is strictly above `threshold` (or at least
// `threshold` when `inclusive` is set).
double PrecisionAt(std::span<const IouCounts> counts, double threshold,
                   bool inclusive = false);
EvalReport Summarize(std::span<const IouCounts> counts,
                     const std::vector<double>& thresholds = kDefaultThresholds,
                     bool inclusive = false);

std::vector<IouCounts> CountAll(std::span<const EvalSample> samples);
double OverallIou(std::span<const EvalSample> samples);
double MeanIou(std::span<const EvalSample> samples);
double PrecisionAt(std::span<const EvalSample> samples, double threshold,
                   bool inclusive = false);

struct SampleResult {
  std::string id;
  IouCounts counts;
};

struct DirEvaluation {
  EvalReport report;
  std::vector<SampleResult> samples;
};

struct EvaluateOptions {
  std::vector<double> thresholds = kDefaultThresholds;
  bool inclusive = false;
  // Records from this split are evaluated; std::nullopt means every split.
  std::optional<Split> split = Split::kTest;
};

// Pairs "<pred_dir>/<record id>.png" with each selected, non-discarded
// record's ground-truth mask.
DirEvaluation EvaluateDirs(const std::string& pred_dir, const Manifest& manifest,
                           const EvaluateOptions& options = {});

// Aligned table: Pr@... columns in threshold order, then oIoU and mIoU.
std::string FormatReportTable(const EvalReport& report, const std::string& label);
std::string FormatReportCsv(const EvalReport& report);
std::string FormatSampleCsv(std::span<const SampleResult> samples);

}  // namespace refseg

#endif  // REFSEG_METRICS_H_
