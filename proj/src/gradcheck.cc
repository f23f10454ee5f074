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

#include "refseg/gradcheck.h"

#include <algorithm>
#include <cmath>

namespace refseg::nn {

bool GradEntryPasses(double analytic, double numeric, const GradCheckOptions& opts) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= opts.abs_floor) return true;
  return diff / std::max(std::abs(analytic), std::abs(numeric)) < opts.rel_tol;
}

Tensor WeightedSum(const Tensor& x, const Tensor& weights) {
  return Sum(Mul(x, weights));
}

std::vector<GradCheckResult> CheckGradients(const ScalarFn& fn,
                                            const std::vector<Tensor>& inputs,
                                            const std::vector<std::string>& names,
                                            const GradCheckOptions& opts) {
  if (names.size() != inputs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "CheckGradients: one name per input required");
  }
  Tape tape;
  std::vector<Tensor> watched;
  watched.reserve(inputs.size());
  for (const Tensor& t : inputs) watched.push_back(tape.Watch(t.Detached()));
  const Tensor loss = fn(watched);
  if (loss.numel() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "CheckGradients: loss must be a scalar, got " +
                                               ShapeString(loss.shape()));
  }
  if (!loss.tracked()) {
    throw Error(ErrorCode::kInvalidArgument, "CheckGradients: loss does not depend on inputs");
  }
  tape.Backward(loss);

  std::vector<Tensor> probe;
  probe.reserve(inputs.size());
  for (const Tensor& t : inputs) probe.push_back(t.Detached());

  std::vector<GradCheckResult> results;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<double> analytic = tape.Grad(watched[k]);
    if (opts.fault) opts.fault(names[k], analytic);

    GradCheckResult r;
    r.name = names[k];
    r.entries = analytic.size();
    std::vector<double>& values = probe[k].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + opts.step;
      const double plus = fn(probe)[0];
      values[i] = saved - opts.step;
      const double minus = fn(probe)[0];
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * opts.step);

      const double a = analytic[i];
      const double abs_err = std::abs(a - numeric);
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
      r.max_abs_grad = std::max(r.max_abs_grad, std::abs(a));
      if (a == 0.0) ++r.zero_entries;
      if (!GradEntryPasses(a, numeric, opts)) ++r.failures;
      if (abs_err > r.max_abs_err) {
        r.max_abs_err = abs_err;
        r.worst_index = i;
        r.worst_analytic = a;
        r.worst_numeric = numeric;
      }
      if (scale > opts.abs_floor) r.max_rel_err = std::max(r.max_rel_err, rel_err);
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace refseg::nn
