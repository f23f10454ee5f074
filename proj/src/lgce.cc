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

#include "refseg/lgce.h"

#include <map>
#include <random>

namespace refseg::nn {

namespace {

void RequireShape(const Tensor& t, const Shape& expected, const std::string& what) {
  if (t.shape() != expected) {
    throw Error(ErrorCode::kShapeMismatch, what + " has shape " + ShapeString(t.shape()) +
                                               ", expected " + ShapeString(expected));
  }
}

void ZeroOut(Tensor& t) { t = Tensor::Zeros(t.shape()); }

LinearParams InitLinear(ParamInit& init, int d_in, int d_out) {
  return {init.Uniform({d_in, d_out}, d_in), init.Uniform({d_out}, d_in)};
}

AttentionLayerParams InitAttentionLayer(ParamInit& init, int width, bool zero_out) {
  AttentionLayerParams p{Tensor::Full({width}, 1.0), Tensor::Zeros({width}),
                         init.Attention(width)};
  if (zero_out) {
    ZeroOut(p.attn.wo);
    ZeroOut(p.attn.bo);
  }
  return p;
}

Tensor AttentionSublayer(const Tensor& x, const Tensor& g, const Tensor& b,
                         const AttentionParams& attn, int heads, double eps,
                         Tensor* normalized) {
  Tensor n = LayerNorm(x, g, b, eps);
  if (normalized) *normalized = n;
  return MultiHeadSelfAttention(n, attn, heads);
}

Tensor BlockImpl(const Tensor& tokens, const TransformerBlockParams& p, int heads,
                 double eps, Tensor* normalized) {
  if (tokens.rank() != 2 || tokens.dim(1) != p.ln1_g.dim(0)) {
    throw Error(ErrorCode::kShapeMismatch,
                "TransformerBlock: tokens " + ShapeString(tokens.shape()) +
                    " do not match width " + std::to_string(p.ln1_g.dim(0)));
  }
  const Tensor z = Add(tokens, AttentionSublayer(tokens, p.ln1_g, p.ln1_b, p.attn,
                                                 heads, eps, normalized));
  const Tensor hidden = Gelu(Apply(LayerNorm(z, p.ln2_g, p.ln2_b, eps), p.fc1));
  return Add(z, Apply(hidden, p.fc2));
}

Tensor RunStage(Tensor z, const std::vector<TransformerBlockParams>& blocks,
                const LgceConfig& cfg, const std::string& name, LgceTrace* trace) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Tensor normalized;
    z = BlockImpl(z, blocks[i], cfg.heads, cfg.eps, &normalized);
    if (trace) {
      trace->attention.push_back(
          {name + "." + std::to_string(i), normalized.Detached(), &blocks[i].attn});
    }
  }
  return z;
}

Tensor CrossLayer(const Tensor& aligned_lang, const Tensor& visual,
                  const AttentionLayerParams& p, const LgceConfig& cfg,
                  const std::string& name, LgceTrace* trace) {
  const Tensor parts[] = {aligned_lang, visual};
  const Tensor seq = Concat(parts, 0);
  Tensor normalized;
  const Tensor attended =
      AttentionSublayer(seq, p.ln_g, p.ln_b, p.attn, cfg.heads, cfg.eps, &normalized);
  if (trace) trace->attention.push_back({name, normalized.Detached(), &p.attn});
  if (cfg.residual == ResidualMode::kFullSequence) return Add(seq, attended);
  const Tensor lang_only[] = {aligned_lang,
                              Tensor::Zeros({visual.dim(0), visual.dim(1)})};
  return Add(Concat(lang_only, 0), attended);
}

ConvBnParams InitConvBn(ParamInit& init, int c_in, int c_out, bool random_stats) {
  ConvBnParams p;
  p.w = init.Uniform({c_out, c_in, 3, 3}, c_in * 9);
  p.b = init.Uniform({c_out}, c_in * 9);
  if (random_stats) {
    p.mean = init.Uniform({c_out}, 1);
    std::vector<double> var(c_out), gamma(c_out);
    for (double& v : var) v = 0.5 + init.Unit();
    for (double& v : gamma) v = 0.5 + init.Unit();
    p.var = Tensor({c_out}, std::move(var));
    p.gamma = Tensor({c_out}, std::move(gamma));
    p.beta = init.Uniform({c_out}, 1);
  } else {
    p.mean = Tensor::Zeros({c_out});
    p.var = Tensor::Full({c_out}, 1.0);
    p.gamma = Tensor::Full({c_out}, 1.0);
    p.beta = Tensor::Zeros({c_out});
  }
  return p;
}

Tensor ConvBnRelu(const Tensor& x, const ConvBnParams& p, double eps) {
  return Relu(BatchNormInfer(Conv2d(x, p.w, p.b), p.mean, p.var, p.gamma, p.beta, eps));
}

}  // namespace

const char* ResidualModeName(ResidualMode mode) {
  return mode == ResidualMode::kFullSequence ? "full-sequence" : "language-only";
}

ResidualMode ResidualModeFromName(const std::string& name) {
  if (name == "full-sequence") return ResidualMode::kFullSequence;
  if (name == "language-only") return ResidualMode::kLanguageOnly;
  throw Error(ErrorCode::kInvalidArgument, "unknown residual mode '" + name + "'");
}

void LgceConfig::Validate() const {
  for (int v : {c3, c4, ct, h3, w3, h4, w4, heads, mlp_ratio, depth}) {
    if (v <= 0) throw Error(ErrorCode::kInvalidArgument, "LgceConfig: sizes must be positive");
  }
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "LgceConfig: eps must be > 0");
  if (c3 % heads != 0 || c4 % heads != 0) {
    throw Error(ErrorCode::kHeadDivisibility,
                "channels " + std::to_string(c3) + "/" + std::to_string(c4) +
                    " not divisible by " + std::to_string(heads) + " heads");
  }
  if (h3 != 2 * h4 || w3 != 2 * w4) {
    throw Error(ErrorCode::kShapeMismatch, "LgceConfig: shallow map must be twice the deep map");
  }
}

Tensor Apply(const Tensor& x, const LinearParams& p) { return Linear(x, p.w, p.b); }

std::vector<NamedTensor> LgceParams::Named() const {
  std::vector<NamedTensor> out;
  ForEach([&](const std::string& name, const Tensor& t) {
    out.push_back({name, t.Detached()});
  });
  return out;
}

void LgceParams::Assign(const std::vector<NamedTensor>& named) {
  std::map<std::string, const Tensor*> by_name;
  for (const NamedTensor& n : named) by_name[n.name] = &n.value;
  ForEach([&](const std::string& name, Tensor& t) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw Error(ErrorCode::kInvalidArgument, "missing parameter '" + name + "'");
    }
    RequireShape(*it->second, t.shape(), name);
    t = it->second->Detached();
  });
}

TransformerBlockParams InitTransformerBlock(ParamInit& init, int width, int mlp_ratio,
                                            bool zero_output_projections) {
  TransformerBlockParams p;
  p.ln1_g = Tensor::Full({width}, 1.0);
  p.ln1_b = Tensor::Zeros({width});
  p.attn = init.Attention(width);
  p.ln2_g = Tensor::Full({width}, 1.0);
  p.ln2_b = Tensor::Zeros({width});
  p.fc1 = InitLinear(init, width, width * mlp_ratio);
  p.fc2 = InitLinear(init, width * mlp_ratio, width);
  if (zero_output_projections) {
    ZeroOut(p.attn.wo);
    ZeroOut(p.attn.bo);
    ZeroOut(p.fc2.w);
    ZeroOut(p.fc2.b);
  }
  return p;
}

LgceParams InitLgceParams(const LgceConfig& cfg, const LgceInitOptions& opts) {
  cfg.Validate();
  ParamInit init(opts.seed);
  const bool zero = opts.zero_output_projections;
  LgceParams p;
  p.f_h = InitLinear(init, cfg.ct, cfg.c3);
  p.f_l = InitLinear(init, cfg.ct, cfg.c4);
  for (int i = 0; i < cfg.depth; ++i) {
    p.tl_h.push_back(InitTransformerBlock(init, cfg.c3, cfg.mlp_ratio, zero));
  }
  for (int i = 0; i < cfg.depth; ++i) {
    p.tl_l.push_back(InitTransformerBlock(init, cfg.c4, cfg.mlp_ratio, zero));
  }
  p.f_h_prime = InitLinear(init, cfg.c3, cfg.c4);
  p.f_l_prime = InitLinear(init, cfg.c4, cfg.c3);
  p.msa_h = InitAttentionLayer(init, cfg.c3, zero);
  p.msa_l = InitAttentionLayer(init, cfg.c4, zero);
  return p;
}

void ValidatePyramid(const FeaturePyramid& p, const LgceConfig& cfg) {
  RequireShape(p.v3, {cfg.c3, cfg.h3, cfg.w3}, "V3");
  RequireShape(p.v4, {cfg.c4, cfg.h4, cfg.w4}, "V4");
  if (p.lang.rank() != 2 || p.lang.dim(0) != cfg.ct) {
    throw Error(ErrorCode::kShapeMismatch, "language features have shape " +
                                               ShapeString(p.lang.shape()) + ", expected [" +
                                               std::to_string(cfg.ct) + ",T]");
  }
}

FeaturePyramid RandomPyramid(const LgceConfig& cfg, int words, std::uint64_t seed) {
  ParamInit init(seed);
  return {init.Uniform({cfg.c3, cfg.h3, cfg.w3}, 1), init.Uniform({cfg.c4, cfg.h4, cfg.w4}, 1),
          init.Uniform({cfg.ct, words}, 1)};
}

Tensor TransformerBlock(const Tensor& tokens, const TransformerBlockParams& p, int heads,
                        double eps) {
  return BlockImpl(tokens, p, heads, eps, nullptr);
}

Tensor EmbedPatches(const Tensor& image, int patch, const PatchEmbedParams& p) {
  const Tensor patches = Patchify(image, patch);
  RequireShape(p.pos, {patches.dim(0), p.proj.w.dim(1)}, "position embedding");
  return Add(Apply(patches, p.proj), p.pos);
}

Tensor MeanLanguage(const Tensor& lang) {
  if (lang.rank() != 2) {
    throw Error(ErrorCode::kShapeMismatch, "language features must be [ct,T]");
  }
  return Mean(lang, 1);
}

Tensor MapToTokens(const Tensor& map) {
  if (map.rank() != 3) throw Error(ErrorCode::kShapeMismatch, "map must be [c,h,w]");
  return Transpose(Reshape(map, {map.dim(0), map.dim(1) * map.dim(2)}));
}

Tensor TokensToMap(const Tensor& tokens, int h, int w) {
  if (tokens.rank() != 2 || tokens.dim(0) != h * w) {
    throw Error(ErrorCode::kShapeMismatch, "token count does not match the map size");
  }
  return Reshape(Transpose(tokens), {tokens.dim(1), h, w});
}

namespace {

ScaleSequences ScaleSpecificImpl(const FeaturePyramid& p, const LgceParams& params,
                                 const LgceConfig& cfg, LgceTrace* trace) {
  cfg.Validate();
  ValidatePyramid(p, cfg);
  const Tensor lbar = Reshape(MeanLanguage(p.lang), {1, cfg.ct});
  const Tensor high[] = {Apply(lbar, params.f_h), MapToTokens(p.v3)};
  const Tensor low[] = {Apply(lbar, params.f_l), MapToTokens(p.v4)};
  return {RunStage(Concat(high, 0), params.tl_h, cfg, "tl_h", trace),
          RunStage(Concat(low, 0), params.tl_l, cfg, "tl_l", trace)};
}

ScaleSequences CrossScaleImpl(const SplitTokens& high, const SplitTokens& low,
                              const LgceParams& params, const LgceConfig& cfg,
                              LgceTrace* trace) {
  RequireShape(high.lang, {1, cfg.c3}, "high-scale language token");
  RequireShape(low.lang, {1, cfg.c4}, "low-scale language token");
  if (high.visual.rank() != 2 || high.visual.dim(1) != cfg.c3 || low.visual.rank() != 2 ||
      low.visual.dim(1) != cfg.c4) {
    throw Error(ErrorCode::kShapeMismatch, "visual token widths do not match the config");
  }
  return {CrossLayer(Apply(low.lang, params.f_l_prime), high.visual, params.msa_h, cfg,
                     "msa_h", trace),
          CrossLayer(Apply(high.lang, params.f_h_prime), low.visual, params.msa_l, cfg,
                     "msa_l", trace)};
}

}  // namespace

ScaleSequences ScaleSpecificFusion(const FeaturePyramid& p, const LgceParams& params,
                                   const LgceConfig& cfg) {
  return ScaleSpecificImpl(p, params, cfg, nullptr);
}

SplitTokens SplitScale(const Tensor& z) {
  if (z.rank() != 2) throw Error(ErrorCode::kShapeMismatch, "token sequence must be [n,d]");
  if (z.dim(0) < 2) {
    throw Error(ErrorCode::kTooShort, "sequence of " + std::to_string(z.dim(0)) +
                                          " rows has no visual tokens");
  }
  std::vector<Tensor> parts = Split(z, {1, z.dim(0) - 1}, 0);
  return {std::move(parts[0]), std::move(parts[1])};
}

ScaleSequences CrossScaleFusion(const SplitTokens& high, const SplitTokens& low,
                                const LgceParams& params, const LgceConfig& cfg) {
  return CrossScaleImpl(high, low, params, cfg, nullptr);
}

Tensor LgceForward(const FeaturePyramid& p, const LgceParams& params,
                   const LgceConfig& cfg, LgceTrace* trace) {
  const ScaleSequences z = ScaleSpecificImpl(p, params, cfg, trace);
  const ScaleSequences zp =
      CrossScaleImpl(SplitScale(z.z_h), SplitScale(z.z_l), params, cfg, trace);
  if (trace) {
    trace->scale_specific = {z.z_h.Detached(), z.z_l.Detached()};
    trace->cross_scale = {zp.z_h.Detached(), zp.z_l.Detached()};
  }
  const Tensor maps[] = {
      TokensToMap(SplitScale(zp.z_h).visual, cfg.h3, cfg.w3),
      UpsampleNearest2x(TokensToMap(SplitScale(zp.z_l).visual, cfg.h4, cfg.w4))};
  return Concat(maps, 0);
}

DecoderParams InitDecoder(int c_in, int c_mid, std::uint64_t seed, bool random_stats) {
  ParamInit init(seed);
  DecoderParams p;
  p.block1 = InitConvBn(init, c_in, c_mid, random_stats);
  p.block2 = InitConvBn(init, c_mid, c_mid, random_stats);
  p.out_w = init.Uniform({1, c_mid, 1, 1}, c_mid);
  p.out_b = init.Uniform({1}, c_mid);
  return p;
}

Tensor DecoderHead(const Tensor& fused, const DecoderParams& p) {
  if (fused.rank() != 3 || fused.dim(0) != p.block1.w.dim(1)) {
    throw Error(ErrorCode::kShapeMismatch, "decoder input " + ShapeString(fused.shape()) +
                                               " does not match " +
                                               std::to_string(p.block1.w.dim(1)) +
                                               " input channels");
  }
  const Tensor x = ConvBnRelu(ConvBnRelu(fused, p.block1, p.eps), p.block2, p.eps);
  return Conv2d(x, p.out_w, p.out_b);
}

BinaryMask LogitsToMask(const Tensor& logits) {
  if (logits.rank() != 3 || logits.dim(0) != 1) {
    throw Error(ErrorCode::kShapeMismatch, "logits must be [1,h,w]");
  }
  BinaryMask mask = BinaryMask::Empty(logits.dim(2), logits.dim(1));
  for (std::size_t i = 0; i < logits.numel(); ++i) mask.bits[i] = logits[i] > 0.0 ? 1 : 0;
  return mask;
}

}  // namespace refseg::nn
