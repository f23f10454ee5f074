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

#ifndef REFSEG_LGCE_CHECK_H_
#define REFSEG_LGCE_CHECK_H_

#include <cstdint>
#include <string>
#include <vector>

#include "refseg/lgce.h"

namespace refseg::nn {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct LgceCheckOptions {
  std::uint64_t seed = 0;
  int shape_trials = 50;  // random configs for the shape contract
  int grad_seeds = 5;     // seeds for the finite-difference suite
  int words = 5;
  LgceConfig fixture;     // defaults to the 8/16/6, 4x4/2x2, 2-head config
  // Test hook: perturbs one analytic gradient so the suite must fail.
  bool inject_gradient_fault = false;
};

// Runs every invariant and returns one row per check, in a fixed order.
std::vector<CheckResult> RunLgceChecks(const LgceCheckOptions& opts);

// Fixed-width PASS/FAIL table. Timing is left out so the text is
// reproducible for a given seed.
std::string FormatCheckTable(const std::vector<CheckResult>& results);

bool AllPassed(const std::vector<CheckResult>& results);

// Individual checks, exposed for the tests.
CheckResult CheckLgceGradients(const LgceConfig& cfg, int words, std::uint64_t seed,
                               bool inject_fault);
CheckResult CheckDecoderGradients(std::uint64_t seed);
CheckResult CheckShapeContract(int trials, std::uint64_t seed);
CheckResult CheckIdentityAtZero(const LgceConfig& cfg, int words, std::uint64_t seed);
CheckResult CheckPermutationInvariance(const LgceConfig& cfg, int words,
                                       std::uint64_t seed);
CheckResult CheckSplitConcatInverse(std::uint64_t seed);
CheckResult CheckAttentionRows(const LgceConfig& cfg, int words, std::uint64_t seed);
CheckResult CheckDeterminism(const LgceConfig& cfg, int words, std::uint64_t seed);
CheckResult CheckDeadParameters(const LgceConfig& cfg, int words, std::uint64_t seed);

}  // namespace refseg::nn

#endif  // REFSEG_LGCE_CHECK_H_
