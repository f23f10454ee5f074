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

#ifndef REFSEG_GRADCHECK_H_
#define REFSEG_GRADCHECK_H_

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "refseg/tensor.h"

namespace refseg::nn {

// Maps a list of inputs to a scalar (shape {1}). Called once on tracked
// inputs for the analytic gradient and then repeatedly on untracked copies.
using ScalarFn = std::function<Tensor(const std::vector<Tensor>& inputs)>;

struct GradCheckOptions {
  double step = 1e-5;
  double rel_tol = 1e-4;
  double abs_floor = 1e-7;
  // Test hook: may alter the analytic gradient of a named input before it is
  // compared.
  std::function<void(const std::string& name, std::vector<double>& grad)> fault;
};

struct GradCheckResult {
  std::string name;
  std::size_t entries = 0;
  std::size_t failures = 0;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;  // over entries with a gradient above abs_floor
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  // Largest |analytic| seen, used by dead-gradient detection.
  double max_abs_grad = 0.0;
  std::size_t zero_entries = 0;

  bool passed() const { return failures == 0; }
};

// An entry passes when |a - n| <= abs_floor or |a - n| / max(|a|, |n|) <
// rel_tol, with n the central difference (f(x + h) - f(x - h)) / 2h.
bool GradEntryPasses(double analytic, double numeric, const GradCheckOptions& opts);

// Compares the tape gradient of `fn` against central differences for every
// entry of every input. `names` labels the inputs in the results.
std::vector<GradCheckResult> CheckGradients(const ScalarFn& fn,
                                            const std::vector<Tensor>& inputs,
                                            const std::vector<std::string>& names,
                                            const GradCheckOptions& opts = {});

// Loss helper: sum(x * weights), a generic scalar reduction that does not
// cancel structured gradients the way a plain sum can.
Tensor WeightedSum(const Tensor& x, const Tensor& weights);

}  // namespace refseg::nn

#endif  // REFSEG_GRADCHECK_H_
