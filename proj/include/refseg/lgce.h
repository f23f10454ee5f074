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

#ifndef REFSEG_LGCE_H_
#define REFSEG_LGCE_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "refseg/raster.h"
#include "refseg/tensor.h"

// Language-guided cross-scale enhancement over a two-level feature pyramid,
// the transformer block it is built from, and a small convolutional decoder.
namespace refseg::nn {

// Residual applied around the cross-scale attention layer.
//   kFullSequence: z' = s + MSA(LN(s)) over the whole sequence s.
//   kLanguageOnly: only the aligned language token is added back, at row 0;
//                  visual rows get no skip path.
enum class ResidualMode { kFullSequence, kLanguageOnly };

const char* ResidualModeName(ResidualMode mode);
ResidualMode ResidualModeFromName(const std::string& name);

struct LgceConfig {
  int c3 = 8, c4 = 16;  // channels of the shallow / deep maps
  int ct = 6;           // language channels
  int h3 = 4, w3 = 4;
  int h4 = 2, w4 = 2;
  int heads = 2;
  int mlp_ratio = 4;
  double eps = 1e-5;
  int depth = 1;  // transformer blocks per scale-specific stage
  ResidualMode residual = ResidualMode::kFullSequence;

  // HeadDivisibility when c3 or c4 is not a multiple of heads, ShapeMismatch
  // for a non-adjacent pyramid, InvalidArgument for non-positive values.
  void Validate() const;
};

struct LinearParams {
  Tensor w, b;  // [d_in, d_out], [d_out]

  template <typename Fn>
  void ForEach(const std::string& prefix, Fn&& fn) { Visit(*this, prefix, fn); }
  template <typename Fn>
  void ForEach(const std::string& prefix, Fn&& fn) const { Visit(*this, prefix, fn); }

 private:
  template <typename Self, typename Fn>
  static void Visit(Self& self, const std::string& prefix, Fn& fn) {
    fn(prefix + "w", self.w);
    fn(prefix + "b", self.b);
  }
};

Tensor Apply(const Tensor& x, const LinearParams& p);

// Pre-LN block: z' = z + MSA(LN1(z)); out = z' + fc2(GELU(fc1(LN2(z')))).
struct TransformerBlockParams {
  Tensor ln1_g, ln1_b;
  AttentionParams attn;
  Tensor ln2_g, ln2_b;
  LinearParams fc1, fc2;

  template <typename Fn>
  void ForEach(const std::string& prefix, Fn&& fn) { Visit(*this, prefix, fn); }
  template <typename Fn>
  void ForEach(const std::string& prefix, Fn&& fn) const { Visit(*this, prefix, fn); }

 private:
  template <typename Self, typename Fn>
  static void Visit(Self& self, const std::string& prefix, Fn& fn) {
    fn(prefix + "ln1.g", self.ln1_g);
    fn(prefix + "ln1.b", self.ln1_b);
    self.attn.ForEach(prefix + "attn.", fn);
    fn(prefix + "ln2.g", self.ln2_g);
    fn(prefix + "ln2.b", self.ln2_b);
    self.fc1.ForEach(prefix + "fc1.", fn);
    self.fc2.ForEach(prefix + "fc2.", fn);
  }
};

// LayerNorm followed by a single attention layer; no MLP.
struct AttentionLayerParams {
  Tensor ln_g, ln_b;
  AttentionParams attn;

  template <typename Fn>
  void ForEach(const std::string& prefix, Fn&& fn) { Visit(*this, prefix, fn); }
  template <typename Fn>
  void ForEach(const std::string& prefix, Fn&& fn) const { Visit(*this, prefix, fn); }

 private:
  template <typename Self, typename Fn>
  static void Visit(Self& self, const std::string& prefix, Fn& fn) {
    fn(prefix + "ln.g", self.ln_g);
    fn(prefix + "ln.b", self.ln_b);
    self.attn.ForEach(prefix + "attn.", fn);
  }
};

struct LgceParams {
  LinearParams f_h, f_l;                          // ct -> c3, ct -> c4
  std::vector<TransformerBlockParams> tl_h, tl_l;  // widths c3, c4
  LinearParams f_h_prime, f_l_prime;              // c3 -> c4, c4 -> c3
  AttentionLayerParams msa_h, msa_l;              // widths c3, c4

  template <typename Fn>
  void ForEach(Fn&& fn) { Visit(*this, fn); }
  template <typename Fn>
  void ForEach(Fn&& fn) const { Visit(*this, fn); }

  // Flat (name, value) list in visiting order, for checkpoints.
  std::vector<NamedTensor> Named() const;
  // Replaces every tensor with the same-named entry of `named`. Throws
  // InvalidArgument on a missing name, ShapeMismatch on a shape change.
  void Assign(const std::vector<NamedTensor>& named);

 private:
  template <typename Self, typename Fn>
  static void Visit(Self& self, Fn& fn) {
    self.f_h.ForEach("f_h.", fn);
    self.f_l.ForEach("f_l.", fn);
    for (std::size_t i = 0; i < self.tl_h.size(); ++i) {
      self.tl_h[i].ForEach("tl_h." + std::to_string(i) + ".", fn);
    }
    for (std::size_t i = 0; i < self.tl_l.size(); ++i) {
      self.tl_l[i].ForEach("tl_l." + std::to_string(i) + ".", fn);
    }
    self.f_h_prime.ForEach("f_h_prime.", fn);
    self.f_l_prime.ForEach("f_l_prime.", fn);
    self.msa_h.ForEach("msa_h.", fn);
    self.msa_l.ForEach("msa_l.", fn);
  }
};

struct LgceInitOptions {
  std::uint64_t seed = 0;
  // Zero the attention and MLP output projections (weights and biases), so
  // every residual branch starts as the identity.
  bool zero_output_projections = false;
};

LgceParams InitLgceParams(const LgceConfig& cfg, const LgceInitOptions& opts = {});
TransformerBlockParams InitTransformerBlock(ParamInit& init, int width, int mlp_ratio,
                                            bool zero_output_projections);

struct FeaturePyramid {
  Tensor v3;    // [c3, h3, w3]
  Tensor v4;    // [c4, h4, w4]
  Tensor lang;  // [ct, T], T >= 1
};

// Throws ShapeMismatch when the pyramid does not match `cfg`.
void ValidatePyramid(const FeaturePyramid& p, const LgceConfig& cfg);

// Uniform(-1, 1) entries from a seeded stream.
FeaturePyramid RandomPyramid(const LgceConfig& cfg, int words, std::uint64_t seed);

Tensor TransformerBlock(const Tensor& tokens, const TransformerBlockParams& p,
                        int heads, double eps);

struct PatchEmbedParams {
  LinearParams proj;  // [c*p*p, d]
  Tensor pos;         // [n, d]
};

// Patch projection plus position embedding. PatchDivisibility when the
// image is not a whole number of patches.
Tensor EmbedPatches(const Tensor& image, int patch, const PatchEmbedParams& p);

// [ct, T] -> [ct], the mean over words.
Tensor MeanLanguage(const Tensor& lang);

// [c, h, w] -> [h*w, c] tokens, row-major over pixels.
Tensor MapToTokens(const Tensor& map);
// Inverse of MapToTokens.
Tensor TokensToMap(const Tensor& tokens, int h, int w);

struct ScaleSequences {
  Tensor z_h;  // [1 + h3*w3, c3]
  Tensor z_l;  // [1 + h4*w4, c4]
};

ScaleSequences ScaleSpecificFusion(const FeaturePyramid& p, const LgceParams& params,
                                   const LgceConfig& cfg);

struct SplitTokens {
  Tensor lang;    // [1, d]
  Tensor visual;  // [n - 1, d]
};

// Row 0 versus the rest. TooShort for fewer than two rows.
SplitTokens SplitScale(const Tensor& z);

ScaleSequences CrossScaleFusion(const SplitTokens& high, const SplitTokens& low,
                                const LgceParams& params, const LgceConfig& cfg);

// One attention site, kept for inspection: the normalized sequence fed to
// the attention layer and the parameters it used.
struct AttentionSite {
  std::string name;
  Tensor input;
  const AttentionParams* params = nullptr;
};

struct LgceTrace {
  ScaleSequences scale_specific;
  ScaleSequences cross_scale;
  std::vector<AttentionSite> attention;
};

// Full chain to the fused map [c3 + c4, h3, w3]: the deep visual output is
// nearest-upsampled x2 and concatenated after the shallow one along
// channels. Language outputs are dropped. `trace` is filled when non-null.
Tensor LgceForward(const FeaturePyramid& p, const LgceParams& params,
                   const LgceConfig& cfg, LgceTrace* trace = nullptr);

struct ConvBnParams {
  Tensor w, b;                         // [c_out, c_in, 3, 3], [c_out]
  Tensor mean, var, gamma, beta;       // [c_out]

  template <typename Fn>
  void ForEach(const std::string& prefix, Fn&& fn) { Visit(*this, prefix, fn); }
  template <typename Fn>
  void ForEach(const std::string& prefix, Fn&& fn) const { Visit(*this, prefix, fn); }

 private:
  template <typename Self, typename Fn>
  static void Visit(Self& self, const std::string& prefix, Fn& fn) {
    fn(prefix + "w", self.w);
    fn(prefix + "b", self.b);
    fn(prefix + "bn.mean", self.mean);
    fn(prefix + "bn.var", self.var);
    fn(prefix + "bn.gamma", self.gamma);
    fn(prefix + "bn.beta", self.beta);
  }
};

struct DecoderParams {
  ConvBnParams block1, block2;
  Tensor out_w, out_b;  // [1, c_mid, 1, 1], [1]
  double eps = 1e-5;

  template <typename Fn>
  void ForEach(Fn&& fn) { Visit(*this, fn); }
  template <typename Fn>
  void ForEach(Fn&& fn) const { Visit(*this, fn); }

 private:
  template <typename Self, typename Fn>
  static void Visit(Self& self, Fn& fn) {
    self.block1.ForEach("block1.", fn);
    self.block2.ForEach("block2.", fn);
    fn(std::string("out.w"), self.out_w);
    fn(std::string("out.b"), self.out_b);
  }
};

// Running statistics start at mean 0, variance 1 unless `random_stats`.
DecoderParams InitDecoder(int c_in, int c_mid, std::uint64_t seed,
                          bool random_stats = false);

// conv3x3 -> BN -> ReLU, twice, then a 1x1 conv to [1, h, w] logits.
Tensor DecoderHead(const Tensor& fused, const DecoderParams& p);

// Foreground where the logit is strictly positive; a zero logit is
// background.
BinaryMask LogitsToMask(const Tensor& logits);

}  // namespace refseg::nn

#endif  // REFSEG_LGCE_H_
