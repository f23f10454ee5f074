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

#ifndef REFSEG_TENSOR_H_
#define REFSEG_TENSOR_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "refseg/error.h"

// Dense float64 tensors with a reverse-mode tape. The operator set is the one
// the cross-scale fusion module and its decoder need, nothing more: no
// broadcasting beyond Linear's leading-dimension rule, no masking.
namespace refseg::nn {

using Shape = std::vector<int>;

std::string ShapeString(const Shape& shape);
std::size_t NumElements(const Shape& shape);

// When enabled (the default in debug builds) every op output is scanned for
// NaN/Inf. Creation-time checks are always on.
void SetFiniteChecks(bool enabled);
bool FiniteChecksEnabled();

class Tape;

class Tensor {
 public:
  Tensor() = default;
  // Throws ShapeMismatch if data.size() != product(shape), NonFinite on
  // NaN/Inf values.
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Zeros(Shape shape);
  static Tensor Full(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(axis); }
  std::size_t numel() const { return data_.size(); }

  const std::vector<double>& data() const { return data_; }
  // Direct write access, used by finite-difference probes and loaders.
  std::vector<double>& mutable_data() { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  // Same values, no tape link.
  Tensor Detached() const { return Tensor(shape_, data_, nullptr, -1); }

 private:
  friend class Tape;
  Tensor(Shape shape, std::vector<double> data, Tape* tape, int node)
      : shape_(std::move(shape)), data_(std::move(data)), tape_(tape), node_(node) {}

  Shape shape_;
  std::vector<double> data_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Receives the gradient of the op's output and accumulates into the
// gradients of its inputs. Entries of `input_grads` are null for inputs that
// are not tracked.
using BackwardFn = std::function<void(std::span<const double> output_grad,
                                      std::span<std::vector<double>*> input_grads)>;

// Append-only record of the ops applied to tracked tensors. Nodes are stored
// in creation order, which is already a topological order, so Backward visits
// each node exactly once walking from the end.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers `value` as a leaf and returns a tracked copy.
  Tensor Watch(const Tensor& value);

  // Builds the output tensor of an op. Records a node when any input is
  // tracked; the returned tensor is untracked otherwise.
  static Tensor Record(const char* op, Shape shape, std::vector<double> data,
                       std::initializer_list<const Tensor*> inputs,
                       BackwardFn backward);
  static Tensor Record(const char* op, Shape shape, std::vector<double> data,
                       std::span<const Tensor* const> inputs, BackwardFn backward);

  // Seeds d(output) with ones (or `seed`) and propagates to every node.
  void Backward(const Tensor& output);
  void Backward(const Tensor& output, std::span<const double> seed);

  // Gradient accumulated for a tracked tensor (zeros before Backward).
  const std::vector<double>& Grad(const Tensor& t) const;

  std::size_t size() const { return nodes_.size(); }
  const std::string& OpName(int node) const { return nodes_.at(node).op; }

 private:
  struct Node {
    std::string op;
    std::vector<int> inputs;  // -1 for untracked inputs
    BackwardFn backward;
  };

  int AddNode(std::string op, std::vector<int> inputs, std::size_t numel,
              BackwardFn backward);

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
};

// ---- element-wise and structural ops ----
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double factor);
Tensor Sum(const Tensor& a);  // shape {1}
Tensor Reshape(const Tensor& a, Shape shape);
Tensor Transpose(const Tensor& a);  // rank 2 only
Tensor Relu(const Tensor& a);
// Exact GELU, x * Phi(x) with the Gaussian CDF via erf.
Tensor Gelu(const Tensor& a);

// ---- linear algebra ----
Tensor MatMul(const Tensor& a, const Tensor& b);
// x[..., d_in] * W[d_in, d_out] + b[d_out], applied over all leading dims.
Tensor Linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// ---- normalization ----
// Max-subtracted softmax along `axis`.
Tensor Softmax(const Tensor& x, int axis);
// Per-vector normalization over the last dimension, then gamma/beta affine.
Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps);
// Inference-mode batch norm on [c, h, w] with fixed running statistics.
// Gradients flow to x, gamma and beta.
Tensor BatchNormInfer(const Tensor& x, const Tensor& running_mean,
                      const Tensor& running_var, const Tensor& gamma,
                      const Tensor& beta, double eps);

// ---- shape ops ----
Tensor Concat(std::span<const Tensor> parts, int axis);
std::vector<Tensor> Split(const Tensor& x, const std::vector<int>& sizes, int axis);
// Arithmetic mean along `axis`. Values are summed in sorted order so the
// result does not depend on the order of the reduced entries.
Tensor Mean(const Tensor& x, int axis);
// [c, h, w] -> [c, 2h, 2w], each value copied into a 2x2 block.
Tensor UpsampleNearest2x(const Tensor& x);
// [c, h, w] -> [(h/p)*(w/p), c*p*p]; patches row-major, each flattened
// channel-major then row then column.
Tensor Patchify(const Tensor& image, int patch);

// Same-padded 2-D convolution. x[c_in, h, w], weight[c_out, c_in, k, k] with
// odd k, bias[c_out].
Tensor Conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias);

// ---- attention ----
struct AttentionParams {
  // No key bias: it shifts every logit in a softmax row by the same amount,
  // so it never affects the output and would only collect zero gradients.
  Tensor wq, bq, wk, wv, bv;  // [d, d], [d]
  Tensor wo, bo;              // output projection

  template <typename Fn>
  void ForEach(const std::string& prefix, Fn&& fn) { Visit(*this, prefix, fn); }
  template <typename Fn>
  void ForEach(const std::string& prefix, Fn&& fn) const { Visit(*this, prefix, fn); }

 private:
  template <typename Self, typename Fn>
  static void Visit(Self& self, const std::string& prefix, Fn& fn) {
    fn(prefix + "wq", self.wq); fn(prefix + "bq", self.bq);
    fn(prefix + "wk", self.wk);
    fn(prefix + "wv", self.wv); fn(prefix + "bv", self.bv);
    fn(prefix + "wo", self.wo); fn(prefix + "bo", self.bo);
  }
};

// Per-head scaled dot-product attention (scale 1/sqrt(d/heads)), heads
// concatenated, then the output projection. Throws HeadDivisibility when d
// is not a multiple of heads.
Tensor MultiHeadSelfAttention(const Tensor& x, const AttentionParams& params,
                              int heads);
// The softmax weight matrices [n, n], one per head.
std::vector<Tensor> AttentionWeights(const Tensor& x, const AttentionParams& params,
                                     int heads);

// ---- parameters ----
// Deterministic initializer: values uniform in [-1/sqrt(fan_in),
// 1/sqrt(fan_in)] drawn from an mt19937_64 stream. The double conversion
// uses the top 53 bits, so identical seeds give bit-identical parameters on
// every platform.
class ParamInit {
 public:
  explicit ParamInit(std::uint64_t seed) : rng_(seed) {}

  double Unit();  // [0, 1)
  Tensor Uniform(Shape shape, int fan_in);
  Tensor Normal(Shape shape, double stddev);
  AttentionParams Attention(int width);

 private:
  std::mt19937_64 rng_;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Checkpoint layout: a UTF-8 text manifest, one "name<TAB>d0xd1x...<TAB>
// byte_offset" line per tensor, closed by a line containing only "end",
// followed by the payload of little-endian float64 values.
void SaveCheckpoint(const std::string& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> LoadCheckpoint(const std::string& path);

}  // namespace refseg::nn

#endif  // REFSEG_TENSOR_H_
