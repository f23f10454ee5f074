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

#include "refseg/tensor.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace refseg::nn {

namespace {

#ifdef NDEBUG
std::atomic<bool> g_finite_checks{false};
#else
std::atomic<bool> g_finite_checks{true};
#endif

[[noreturn]] void ShapeError(const std::string& op, const std::string& detail) {
  throw Error(ErrorCode::kShapeMismatch, op + ": " + detail);
}

void CheckFinite(const std::vector<double>& data, const char* where) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFinite, std::string(where) + ": non-finite value");
    }
  }
}

// Splits a shape around `axis` into (outer, length, inner) extents.
struct AxisView {
  std::size_t outer = 1, length = 1, inner = 1;
};

AxisView ViewAround(const Shape& shape, int axis, const char* op) {
  if (axis < 0 || axis >= static_cast<int>(shape.size())) {
    ShapeError(op, "axis " + std::to_string(axis) + " out of range for " +
                       ShapeString(shape));
  }
  AxisView v;
  for (int i = 0; i < axis; ++i) v.outer *= shape[i];
  v.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

void Accumulate(std::vector<double>* grad, std::span<const double> delta) {
  for (std::size_t i = 0; i < delta.size(); ++i) (*grad)[i] += delta[i];
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

std::string ShapeString(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

void SetFiniteChecks(bool enabled) { g_finite_checks = enabled; }
bool FiniteChecksEnabled() { return g_finite_checks; }

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (int d : shape_) {
    if (d <= 0) ShapeError("Tensor", "dimensions must be positive, got " + ShapeString(shape_));
  }
  if (shape_.empty() || data_.size() != NumElements(shape_)) {
    ShapeError("Tensor", std::to_string(data_.size()) + " values for shape " +
                             ShapeString(shape_));
  }
  CheckFinite(data_, "Tensor");
}

Tensor Tensor::Zeros(Shape shape) { return Full(std::move(shape), 0.0); }

Tensor Tensor::Full(Shape shape, double value) {
  const std::size_t n = NumElements(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tape::Watch(const Tensor& value) {
  const int node = AddNode("leaf", {}, value.numel(), nullptr);
  return Tensor(value.shape(), value.data(), this, node);
}

int Tape::AddNode(std::string op, std::vector<int> inputs, std::size_t numel,
                  BackwardFn backward) {
  nodes_.push_back({std::move(op), std::move(inputs), std::move(backward)});
  grads_.emplace_back(numel, 0.0);
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::Record(const char* op, Shape shape, std::vector<double> data,
                    std::initializer_list<const Tensor*> inputs, BackwardFn backward) {
  return Record(op, std::move(shape), std::move(data),
                std::span<const Tensor* const>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Tensor Tape::Record(const char* op, Shape shape, std::vector<double> data,
                    std::span<const Tensor* const> inputs, BackwardFn backward) {
  if (g_finite_checks) CheckFinite(data, op);
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (t->tape_ == nullptr) continue;
    if (tape != nullptr && tape != t->tape_) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(op) + ": inputs recorded on different tapes");
    }
    tape = t->tape_;
  }
  if (tape == nullptr) return Tensor(std::move(shape), std::move(data), nullptr, -1);
  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (const Tensor* t : inputs) ids.push_back(t->tape_ ? t->node_ : -1);
  const int node = tape->AddNode(op, std::move(ids), data.size(), std::move(backward));
  return Tensor(std::move(shape), std::move(data), tape, node);
}

void Tape::Backward(const Tensor& output) {
  const std::vector<double> ones(output.numel(), 1.0);
  Backward(output, ones);
}

void Tape::Backward(const Tensor& output, std::span<const double> seed) {
  if (output.tape_ != this) {
    throw Error(ErrorCode::kInvalidArgument, "Backward: output not recorded on this tape");
  }
  if (seed.size() != output.numel()) {
    ShapeError("Backward", "seed size does not match output");
  }
  for (auto& g : grads_) std::fill(g.begin(), g.end(), 0.0);
  std::copy(seed.begin(), seed.end(), grads_[output.node_].begin());

  std::vector<std::vector<double>*> input_grads;
  for (int i = output.node_; i >= 0; --i) {
    Node& node = nodes_[i];
    if (!node.backward) continue;
    const std::vector<double>& g = grads_[i];
    if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) continue;
    input_grads.clear();
    for (int in : node.inputs) input_grads.push_back(in >= 0 ? &grads_[in] : nullptr);
    node.backward(g, input_grads);
  }
}

const std::vector<double>& Tape::Grad(const Tensor& t) const {
  if (t.tape_ != this) {
    throw Error(ErrorCode::kInvalidArgument, "Grad: tensor not recorded on this tape");
  }
  return grads_[t.node_];
}

Tensor Add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    ShapeError("Add", ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  }
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return Tape::Record("add", a.shape(), std::move(out), {&a, &b},
                      [](std::span<const double> g, std::span<std::vector<double>*> in) {
                        if (in[0]) Accumulate(in[0], g);
                        if (in[1]) Accumulate(in[1], g);
                      });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    ShapeError("Mul", ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  }
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return Tape::Record(
      "mul", a.shape(), std::move(out), {&a, &b},
      [av = a.data(), bv = b.data()](std::span<const double> g,
                                     std::span<std::vector<double>*> in) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (in[0]) (*in[0])[i] += g[i] * bv[i];
          if (in[1]) (*in[1])[i] += g[i] * av[i];
        }
      });
}

Tensor Scale(const Tensor& a, double factor) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  return Tape::Record("scale", a.shape(), std::move(out), {&a},
                      [factor](std::span<const double> g,
                               std::span<std::vector<double>*> in) {
                        for (std::size_t i = 0; i < g.size(); ++i) {
                          (*in[0])[i] += g[i] * factor;
                        }
                      });
}

Tensor Sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return Tape::Record("sum", {1}, {total}, {&a},
                      [](std::span<const double> g, std::span<std::vector<double>*> in) {
                        for (double& v : *in[0]) v += g[0];
                      });
}

Tensor Reshape(const Tensor& a, Shape shape) {
  if (NumElements(shape) != a.numel()) {
    ShapeError("Reshape", ShapeString(a.shape()) + " -> " + ShapeString(shape));
  }
  return Tape::Record("reshape", std::move(shape), a.data(), {&a},
                      [](std::span<const double> g, std::span<std::vector<double>*> in) {
                        Accumulate(in[0], g);
                      });
}

Tensor Transpose(const Tensor& a) {
  if (a.rank() != 2) ShapeError("Transpose", "rank 2 required, got " + ShapeString(a.shape()));
  const int m = a.dim(0), n = a.dim(1);
  std::vector<double> out(a.numel());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  }
  return Tape::Record("transpose", {n, m}, std::move(out), {&a},
                      [m, n](std::span<const double> g,
                             std::span<std::vector<double>*> in) {
                        for (int i = 0; i < m; ++i) {
                          for (int j = 0; j < n; ++j) (*in[0])[i * n + j] += g[j * m + i];
                        }
                      });
}

Tensor Relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
  return Tape::Record("relu", a.shape(), std::move(out), {&a},
                      [av = a.data()](std::span<const double> g,
                                      std::span<std::vector<double>*> in) {
                        for (std::size_t i = 0; i < g.size(); ++i) {
                          if (av[i] > 0.0) (*in[0])[i] += g[i];
                        }
                      });
}

Tensor Gelu(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a[i] * 0.5 * (1.0 + std::erf(a[i] * kInvSqrt2));
  }
  return Tape::Record("gelu", a.shape(), std::move(out), {&a},
                      [av = a.data()](std::span<const double> g,
                                      std::span<std::vector<double>*> in) {
                        for (std::size_t i = 0; i < g.size(); ++i) {
                          const double x = av[i];
                          const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
                          const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
                          (*in[0])[i] += g[i] * (cdf + x * pdf);
                        }
                      });
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    ShapeError("MatMul", ShapeString(a.shape()) + " x " + ShapeString(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      for (int j = 0; j < n; ++j) out[i * n + j] += av * b[p * n + j];
    }
  }
  return Tape::Record(
      "matmul", {m, n}, std::move(out), {&a, &b},
      [av = a.data(), bv = b.data(), m, k, n](std::span<const double> g,
                                              std::span<std::vector<double>*> in) {
        if (in[0]) {
          for (int i = 0; i < m; ++i) {
            for (int p = 0; p < k; ++p) {
              double s = 0.0;
              for (int j = 0; j < n; ++j) s += g[i * n + j] * bv[p * n + j];
              (*in[0])[i * k + p] += s;
            }
          }
        }
        if (in[1]) {
          for (int i = 0; i < m; ++i) {
            for (int p = 0; p < k; ++p) {
              const double a_ip = av[i * k + p];
              for (int j = 0; j < n; ++j) (*in[1])[p * n + j] += a_ip * g[i * n + j];
            }
          }
        }
      });
}

Tensor Linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weight.dim(1) ||
      x.shape().back() != weight.dim(0)) {
    ShapeError("Linear", "x " + ShapeString(x.shape()) + ", W " +
                             ShapeString(weight.shape()) + ", b " +
                             ShapeString(bias.shape()));
  }
  const int d_in = weight.dim(0), d_out = weight.dim(1);
  const std::size_t rows = x.numel() / d_in;
  Shape shape = x.shape();
  shape.back() = d_out;
  std::vector<double> out(rows * d_out);
  for (std::size_t r = 0; r < rows; ++r) {
    for (int j = 0; j < d_out; ++j) out[r * d_out + j] = bias[j];
    for (int p = 0; p < d_in; ++p) {
      const double xv = x[r * d_in + p];
      for (int j = 0; j < d_out; ++j) out[r * d_out + j] += xv * weight[p * d_out + j];
    }
  }
  return Tape::Record(
      "linear", std::move(shape), std::move(out), {&x, &weight, &bias},
      [xv = x.data(), wv = weight.data(), rows, d_in, d_out](
          std::span<const double> g, std::span<std::vector<double>*> in) {
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gr = &g[r * d_out];
          if (in[0]) {
            for (int p = 0; p < d_in; ++p) {
              double s = 0.0;
              for (int j = 0; j < d_out; ++j) s += gr[j] * wv[p * d_out + j];
              (*in[0])[r * d_in + p] += s;
            }
          }
          if (in[1]) {
            for (int p = 0; p < d_in; ++p) {
              const double x_rp = xv[r * d_in + p];
              for (int j = 0; j < d_out; ++j) (*in[1])[p * d_out + j] += x_rp * gr[j];
            }
          }
          if (in[2]) {
            for (int j = 0; j < d_out; ++j) (*in[2])[j] += gr[j];
          }
        }
      });
}

Tensor Softmax(const Tensor& x, int axis) {
  const AxisView v = ViewAround(x.shape(), axis, "Softmax");
  std::vector<double> out(x.numel());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.length * v.inner + i;
      double max_value = x[base];
      for (std::size_t k = 1; k < v.length; ++k) {
        max_value = std::max(max_value, x[base + k * v.inner]);
      }
      double total = 0.0;
      for (std::size_t k = 0; k < v.length; ++k) {
        const double e = std::exp(x[base + k * v.inner] - max_value);
        out[base + k * v.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < v.length; ++k) out[base + k * v.inner] /= total;
    }
  }
  std::vector<double> y = out;
  return Tape::Record("softmax", x.shape(), std::move(out), {&x},
                      [y = std::move(y), v](std::span<const double> g,
                                            std::span<std::vector<double>*> in) {
                        for (std::size_t o = 0; o < v.outer; ++o) {
                          for (std::size_t i = 0; i < v.inner; ++i) {
                            const std::size_t base = o * v.length * v.inner + i;
                            double dot = 0.0;
                            for (std::size_t k = 0; k < v.length; ++k) {
                              const std::size_t idx = base + k * v.inner;
                              dot += g[idx] * y[idx];
                            }
                            for (std::size_t k = 0; k < v.length; ++k) {
                              const std::size_t idx = base + k * v.inner;
                              (*in[0])[idx] += y[idx] * (g[idx] - dot);
                            }
                          }
                        }
                      });
}

Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps) {
  const int d = x.shape().back();
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    ShapeError("LayerNorm", "gamma/beta must be [" + std::to_string(d) + "]");
  }
  const std::size_t rows = x.numel() / d;
  std::vector<double> xhat(x.numel()), rstd(rows), out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = &x.data()[r * d];
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += xr[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= d;
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < d; ++j) {
      xhat[r * d + j] = (xr[j] - mean) * rstd[r];
      out[r * d + j] = gamma[j] * xhat[r * d + j] + beta[j];
    }
  }
  return Tape::Record(
      "layer_norm", x.shape(), std::move(out), {&x, &gamma, &beta},
      [xhat = std::move(xhat), rstd = std::move(rstd), gv = gamma.data(), rows, d](
          std::span<const double> g, std::span<std::vector<double>*> in) {
        std::vector<double> gxhat(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gr = &g[r * d];
          const double* xh = &xhat[r * d];
          if (in[1]) {
            for (int j = 0; j < d; ++j) (*in[1])[j] += gr[j] * xh[j];
          }
          if (in[2]) {
            for (int j = 0; j < d; ++j) (*in[2])[j] += gr[j];
          }
          if (in[0]) {
            double mean_g = 0.0, mean_gx = 0.0;
            for (int j = 0; j < d; ++j) {
              gxhat[j] = gr[j] * gv[j];
              mean_g += gxhat[j];
              mean_gx += gxhat[j] * xh[j];
            }
            mean_g /= d;
            mean_gx /= d;
            for (int j = 0; j < d; ++j) {
              (*in[0])[r * d + j] += rstd[r] * (gxhat[j] - mean_g - xh[j] * mean_gx);
            }
          }
        }
      });
}

Tensor BatchNormInfer(const Tensor& x, const Tensor& running_mean,
                      const Tensor& running_var, const Tensor& gamma,
                      const Tensor& beta, double eps) {
  if (x.rank() != 3) ShapeError("BatchNormInfer", "x must be [c,h,w]");
  const int c = x.dim(0);
  for (const Tensor* t : {&running_mean, &running_var, &gamma, &beta}) {
    if (t->shape() != Shape{c}) {
      ShapeError("BatchNormInfer", "statistics must be [" + std::to_string(c) + "]");
    }
  }
  const std::size_t plane = x.numel() / c;
  std::vector<double> out(x.numel());
  for (int ch = 0; ch < c; ++ch) {
    if (!(running_var[ch] + eps > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "BatchNormInfer: variance + eps must be > 0");
    }
    const double inv = 1.0 / std::sqrt(running_var[ch] + eps);
    for (std::size_t i = 0; i < plane; ++i) {
      const std::size_t idx = ch * plane + i;
      out[idx] = gamma[ch] * (x[idx] - running_mean[ch]) * inv + beta[ch];
    }
  }
  return Tape::Record(
      "batch_norm_infer", x.shape(), std::move(out),
      {&x, &running_mean, &running_var, &gamma, &beta},
      [xv = x.data(), mv = running_mean.data(), vv = running_var.data(),
       gv = gamma.data(), c, plane, eps](std::span<const double> g,
                                         std::span<std::vector<double>*> in) {
        for (int ch = 0; ch < c; ++ch) {
          const double inv = 1.0 / std::sqrt(vv[ch] + eps);
          for (std::size_t i = 0; i < plane; ++i) {
            const std::size_t idx = ch * plane + i;
            const double centered = xv[idx] - mv[ch];
            if (in[0]) (*in[0])[idx] += g[idx] * gv[ch] * inv;
            if (in[1]) (*in[1])[ch] -= g[idx] * gv[ch] * inv;
            if (in[2]) {
              (*in[2])[ch] += g[idx] * gv[ch] * centered * -0.5 * inv * inv * inv;
            }
            if (in[3]) (*in[3])[ch] += g[idx] * centered * inv;
            if (in[4]) (*in[4])[ch] += g[idx];
          }
        }
      });
}

Tensor Concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) ShapeError("Concat", "no inputs");
  const Shape& first = parts[0].shape();
  Shape shape = first;
  ViewAround(first, axis, "Concat");
  shape[axis] = 0;
  for (const Tensor& p : parts) {
    Shape probe = p.shape();
    if (probe.size() != first.size()) ShapeError("Concat", "rank mismatch");
    probe[axis] = first[axis];
    if (probe != first) {
      ShapeError("Concat", ShapeString(p.shape()) + " vs " + ShapeString(first));
    }
    shape[axis] += p.dim(axis);
  }
  const AxisView out_view = ViewAround(shape, axis, "Concat");
  std::vector<double> out(NumElements(shape));
  std::vector<std::size_t> lengths;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t len = p.dim(axis);
    lengths.push_back(len);
    for (std::size_t o = 0; o < out_view.outer; ++o) {
      std::copy_n(&p.data()[o * len * out_view.inner], len * out_view.inner,
                  &out[(o * out_view.length + offset) * out_view.inner]);
    }
    offset += len;
  }
  std::vector<const Tensor*> inputs;
  for (const Tensor& p : parts) inputs.push_back(&p);
  return Tape::Record(
      "concat", std::move(shape), std::move(out), inputs,
      [lengths, out_view](std::span<const double> g, std::span<std::vector<double>*> in) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < lengths.size(); ++k) {
          const std::size_t len = lengths[k];
          if (in[k]) {
            for (std::size_t o = 0; o < out_view.outer; ++o) {
              const double* src = &g[(o * out_view.length + offset) * out_view.inner];
              double* dst = &(*in[k])[o * len * out_view.inner];
              for (std::size_t i = 0; i < len * out_view.inner; ++i) dst[i] += src[i];
            }
          }
          offset += len;
        }
      });
}

std::vector<Tensor> Split(const Tensor& x, const std::vector<int>& sizes, int axis) {
  const AxisView v = ViewAround(x.shape(), axis, "Split");
  std::size_t total = 0;
  for (int s : sizes) {
    if (s <= 0) ShapeError("Split", "sizes must be positive");
    total += s;
  }
  if (total != v.length) {
    ShapeError("Split", "sizes sum to " + std::to_string(total) + ", axis has " +
                            std::to_string(v.length));
  }
  std::vector<Tensor> out;
  std::size_t offset = 0;
  for (int s : sizes) {
    const std::size_t len = s;
    Shape shape = x.shape();
    shape[axis] = s;
    std::vector<double> data(v.outer * len * v.inner);
    for (std::size_t o = 0; o < v.outer; ++o) {
      std::copy_n(&x.data()[(o * v.length + offset) * v.inner], len * v.inner,
                  &data[o * len * v.inner]);
    }
    out.push_back(Tape::Record(
        "split", std::move(shape), std::move(data), {&x},
        [v, offset, len](std::span<const double> g, std::span<std::vector<double>*> in) {
          for (std::size_t o = 0; o < v.outer; ++o) {
            const double* src = &g[o * len * v.inner];
            double* dst = &(*in[0])[(o * v.length + offset) * v.inner];
            for (std::size_t i = 0; i < len * v.inner; ++i) dst[i] += src[i];
          }
        }));
    offset += len;
  }
  return out;
}

Tensor Mean(const Tensor& x, int axis) {
  const AxisView v = ViewAround(x.shape(), axis, "Mean");
  Shape shape = x.shape();
  shape.erase(shape.begin() + axis);
  if (shape.empty()) shape = {1};
  std::vector<double> out(v.outer * v.inner);
  std::vector<double> values(v.length);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      for (std::size_t k = 0; k < v.length; ++k) {
        values[k] = x[(o * v.length + k) * v.inner + i];
      }
      std::sort(values.begin(), values.end());
      double total = 0.0;
      for (double value : values) total += value;
      out[o * v.inner + i] = total / static_cast<double>(v.length);
    }
  }
  return Tape::Record("mean", std::move(shape), std::move(out), {&x},
                      [v](std::span<const double> g, std::span<std::vector<double>*> in) {
                        const double scale = 1.0 / static_cast<double>(v.length);
                        for (std::size_t o = 0; o < v.outer; ++o) {
                          for (std::size_t k = 0; k < v.length; ++k) {
                            for (std::size_t i = 0; i < v.inner; ++i) {
                              (*in[0])[(o * v.length + k) * v.inner + i] +=
                                  g[o * v.inner + i] * scale;
                            }
                          }
                        }
                      });
}

Tensor UpsampleNearest2x(const Tensor& x) {
  if (x.rank() != 3) ShapeError("UpsampleNearest2x", "x must be [c,h,w]");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = 2 * h, ow = 2 * w;
  std::vector<double> out(static_cast<std::size_t>(c) * oh * ow);
  for (int ch = 0; ch < c; ++ch) {
    for (int r = 0; r < oh; ++r) {
      for (int col = 0; col < ow; ++col) {
        out[(ch * oh + r) * ow + col] = x[(ch * h + r / 2) * w + col / 2];
      }
    }
  }
  return Tape::Record("upsample_nearest2x", {c, oh, ow}, std::move(out), {&x},
                      [c, h, w](std::span<const double> g,
                                std::span<std::vector<double>*> in) {
                        const int oh = 2 * h, ow = 2 * w;
                        for (int ch = 0; ch < c; ++ch) {
                          for (int r = 0; r < oh; ++r) {
                            for (int col = 0; col < ow; ++col) {
                              (*in[0])[(ch * h + r / 2) * w + col / 2] +=
                                  g[(ch * oh + r) * ow + col];
                            }
                          }
                        }
                      });
}

Tensor Patchify(const Tensor& image, int patch) {
  if (image.rank() != 3) ShapeError("Patchify", "image must be [c,h,w]");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (patch <= 0 || h % patch != 0 || w % patch != 0) {
    throw Error(ErrorCode::kPatchDivisibility,
                "image " + std::to_string(h) + "x" + std::to_string(w) +
                    " is not divisible into " + std::to_string(patch) + "-pixel patches");
  }
  const int across = w / patch;
  const int n = (h / patch) * across;
  const int cols = c * patch * patch;
  std::vector<std::size_t> source(static_cast<std::size_t>(n) * cols);
  for (int t = 0; t < n; ++t) {
    const int pr = t / across, pc = t % across;
    for (int ch = 0; ch < c; ++ch) {
      for (int dy = 0; dy < patch; ++dy) {
        for (int dx = 0; dx < patch; ++dx) {
          const int col = (ch * patch + dy) * patch + dx;
          source[t * cols + col] =
              (static_cast<std::size_t>(ch) * h + pr * patch + dy) * w + pc * patch + dx;
        }
      }
    }
  }
  std::vector<double> out(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) out[i] = image[source[i]];
  return Tape::Record("patchify", {n, cols}, std::move(out), {&image},
                      [source = std::move(source)](std::span<const double> g,
                                                   std::span<std::vector<double>*> in) {
                        for (std::size_t i = 0; i < source.size(); ++i) {
                          (*in[0])[source[i]] += g[i];
                        }
                      });
}

Tensor Conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 3 || weight.rank() != 4 || bias.rank() != 1 ||
      weight.dim(1) != x.dim(0) || weight.dim(2) != weight.dim(3) ||
      weight.dim(2) % 2 == 0 || bias.dim(0) != weight.dim(0)) {
    ShapeError("Conv2d", "x " + ShapeString(x.shape()) + ", W " +
                             ShapeString(weight.shape()) + ", b " +
                             ShapeString(bias.shape()));
  }
  const int c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int c_out = weight.dim(0), k = weight.dim(2), pad = k / 2;
  auto w_at = [k, c_in](int o, int i, int dy, int dx) {
    return ((static_cast<std::size_t>(o) * c_in + i) * k + dy) * k + dx;
  };
  std::vector<double> out(static_cast<std::size_t>(c_out) * h * w);
  for (int o = 0; o < c_out; ++o) {
    for (int r = 0; r < h; ++r) {
      for (int col = 0; col < w; ++col) {
        double s = bias[o];
        for (int i = 0; i < c_in; ++i) {
          for (int dy = 0; dy < k; ++dy) {
            const int sr = r + dy - pad;
            if (sr < 0 || sr >= h) continue;
            for (int dx = 0; dx < k; ++dx) {
              const int sc = col + dx - pad;
              if (sc < 0 || sc >= w) continue;
              s += weight[w_at(o, i, dy, dx)] * x[(i * h + sr) * w + sc];
            }
          }
        }
        out[(o * h + r) * w + col] = s;
      }
    }
  }
  return Tape::Record(
      "conv2d", {c_out, h, w}, std::move(out), {&x, &weight, &bias},
      [xv = x.data(), wv = weight.data(), c_in, c_out, h, w, k, pad, w_at](
          std::span<const double> g, std::span<std::vector<double>*> in) {
        for (int o = 0; o < c_out; ++o) {
          for (int r = 0; r < h; ++r) {
            for (int col = 0; col < w; ++col) {
              const double go = g[(o * h + r) * w + col];
              if (in[2]) (*in[2])[o] += go;
              for (int i = 0; i < c_in; ++i) {
                for (int dy = 0; dy < k; ++dy) {
                  const int sr = r + dy - pad;
                  if (sr < 0 || sr >= h) continue;
                  for (int dx = 0; dx < k; ++dx) {
                    const int sc = col + dx - pad;
                    if (sc < 0 || sc >= w) continue;
                    const std::size_t xi = (i * h + sr) * w + sc;
                    const std::size_t wi = w_at(o, i, dy, dx);
                    if (in[0]) (*in[0])[xi] += go * wv[wi];
                    if (in[1]) (*in[1])[wi] += go * xv[xi];
                  }
                }
              }
            }
          }
        }
      });
}

namespace {

struct HeadTensors {
  std::vector<Tensor> q, k, v;
};

HeadTensors ProjectHeads(const Tensor& x, const AttentionParams& p, int heads) {
  if (x.rank() != 2) ShapeError("MultiHeadSelfAttention", "x must be [n,d]");
  const int d = x.dim(1);
  if (heads <= 0 || d % heads != 0) {
    throw Error(ErrorCode::kHeadDivisibility,
                "width " + std::to_string(d) + " is not divisible by " +
                    std::to_string(heads) + " heads");
  }
  const std::vector<int> sizes(heads, d / heads);
  return {Split(Linear(x, p.wq, p.bq), sizes, 1), Split(MatMul(x, p.wk), sizes, 1),
          Split(Linear(x, p.wv, p.bv), sizes, 1)};
}

Tensor HeadWeights(const Tensor& q, const Tensor& k) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
  return Softmax(Scale(MatMul(q, Transpose(k)), scale), 1);
}

}  // namespace

Tensor MultiHeadSelfAttention(const Tensor& x, const AttentionParams& params,
                              int heads) {
  const HeadTensors h = ProjectHeads(x, params, heads);
  std::vector<Tensor> outputs;
  for (int i = 0; i < heads; ++i) {
    outputs.push_back(MatMul(HeadWeights(h.q[i], h.k[i]), h.v[i]));
  }
  return Linear(Concat(outputs, 1), params.wo, params.bo);
}

std::vector<Tensor> AttentionWeights(const Tensor& x, const AttentionParams& params,
                                     int heads) {
  const HeadTensors h = ProjectHeads(x.Detached(), params, heads);
  std::vector<Tensor> out;
  for (int i = 0; i < heads; ++i) out.push_back(HeadWeights(h.q[i], h.k[i]));
  return out;
}

double ParamInit::Unit() {
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

Tensor ParamInit::Uniform(Shape shape, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> data(NumElements(shape));
  for (double& v : data) v = (2.0 * Unit() - 1.0) * bound;
  return Tensor(std::move(shape), std::move(data));
}

Tensor ParamInit::Normal(Shape shape, double stddev) {
  std::vector<double> data(NumElements(shape));
  constexpr double kTwoPi = 6.28318530717958647692;
  for (double& v : data) {
    const double u1 = 1.0 - Unit();  // (0, 1]
    const double u2 = Unit();
    v = stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }
  return Tensor(std::move(shape), std::move(data));
}

AttentionParams ParamInit::Attention(int width) {
  AttentionParams p;
  p.wq = Uniform({width, width}, width);
  p.bq = Uniform({width}, width);
  p.wk = Uniform({width, width}, width);
  p.wv = Uniform({width, width}, width);
  p.bv = Uniform({width}, width);
  p.wo = Uniform({width, width}, width);
  p.bo = Uniform({width}, width);
  return p;
}

void SaveCheckpoint(const std::string& path, std::span<const NamedTensor> tensors) {
  std::string manifest;
  std::size_t offset = 0;
  for (const NamedTensor& t : tensors) {
    if (t.name.empty() || t.name.find_first_of("\t\n") != std::string::npos ||
        t.name == "end") {
      throw Error(ErrorCode::kInvalidArgument, "invalid checkpoint tensor name '" + t.name + "'");
    }
    std::string dims;
    for (int d : t.value.shape()) dims += (dims.empty() ? "" : "x") + std::to_string(d);
    manifest += t.name + "\t" + dims + "\t" + std::to_string(offset) + "\n";
    offset += t.value.numel() * sizeof(double);
  }
  manifest += "end\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write checkpoint '" + path + "'");
  out << manifest;
  for (const NamedTensor& t : tensors) {
    for (double v : t.value.data()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      out.write(bytes, 8);
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + path + "'");
}

std::vector<NamedTensor> LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open checkpoint '" + path + "'");
  struct Entry {
    std::string name;
    Shape shape;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  std::string line;
  bool closed = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      closed = true;
      break;
    }
    std::istringstream fields(line);
    Entry e;
    std::string dims, offset;
    if (!std::getline(fields, e.name, '\t') || !std::getline(fields, dims, '\t') ||
        !std::getline(fields, offset)) {
      throw Error(ErrorCode::kParseError, path + ": malformed manifest line '" + line + "'");
    }
    std::istringstream dim_stream(dims);
    std::string d;
    while (std::getline(dim_stream, d, 'x')) e.shape.push_back(std::stoi(d));
    e.offset = std::stoull(offset);
    entries.push_back(std::move(e));
  }
  if (!closed) throw Error(ErrorCode::kParseError, path + ": manifest not terminated");

  const std::streampos payload = in.tellg();
  std::vector<NamedTensor> out;
  for (const Entry& e : entries) {
    in.seekg(payload + static_cast<std::streamoff>(e.offset));
    std::vector<double> data(NumElements(e.shape));
    for (double& v : data) {
      unsigned char bytes[8];
      in.read(reinterpret_cast<char*>(bytes), 8);
      if (!in) throw Error(ErrorCode::kParseError, path + ": truncated payload");
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[b]} << (8 * b);
      v = std::bit_cast<double>(bits);
    }
    out.push_back({e.name, Tensor(e.shape, std::move(data))});
  }
  return out;
}

}  // namespace refseg::nn
