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

// Straight-line reference evaluation of the fusion module on nested vectors.
// Shares only parameter storage with the library: no ops, no tape.

#ifndef REFSEG_TESTS_LGCE_ORACLE_H_
#define REFSEG_TESTS_LGCE_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <vector>

#include "refseg/lgce.h"

namespace refseg::testing {

using Mat = std::vector<std::vector<double>>;  // [rows][cols]
using nn::Tensor;

inline Mat ToMat(const Tensor& t) {
  Mat m(t.dim(0), std::vector<double>(t.dim(1)));
  for (int r = 0; r < t.dim(0); ++r) {
    for (int c = 0; c < t.dim(1); ++c) m[r][c] = t[r * t.dim(1) + c];
  }
  return m;
}

inline Mat AffineOracle(const Mat& x, const Tensor& w, const Tensor* b) {
  const int din = w.dim(0), dout = w.dim(1);
  Mat out(x.size(), std::vector<double>(dout));
  for (std::size_t r = 0; r < x.size(); ++r) {
    for (int j = 0; j < dout; ++j) {
      double s = b ? (*b)[j] : 0.0;
      for (int k = 0; k < din; ++k) s += x[r][k] * w[k * dout + j];
      out[r][j] = s;
    }
  }
  return out;
}

inline Mat LayerNormOracle(const Mat& x, const Tensor& g, const Tensor& b, double eps) {
  Mat out = x;
  for (auto& row : out) {
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= row.size();
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= row.size();
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = g[j] * (row[j] - mean) / std::sqrt(var + eps) + b[j];
    }
  }
  return out;
}

inline Mat AddOracle(Mat a, const Mat& b) {
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < a[r].size(); ++c) a[r][c] += b[r][c];
  }
  return a;
}

inline Mat MsaOracle(const Mat& x, const nn::AttentionParams& p, int heads) {
  const int n = static_cast<int>(x.size()), d = static_cast<int>(x[0].size());
  const int dh = d / heads;
  const Mat q = AffineOracle(x, p.wq, &p.bq), k = AffineOracle(x, p.wk, nullptr),
            v = AffineOracle(x, p.wv, &p.bv);
  Mat concat(n, std::vector<double>(d));
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < n; ++i) {
      std::vector<double> a(n);
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int t = 0; t < dh; ++t) s += q[i][h * dh + t] * k[j][h * dh + t];
        a[j] = s / std::sqrt(static_cast<double>(dh));
      }
      const double mx = *std::max_element(a.begin(), a.end());
      double z = 0.0;
      for (double& e : a) z += (e = std::exp(e - mx));
      for (int t = 0; t < dh; ++t) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += a[j] / z * v[j][h * dh + t];
        concat[i][h * dh + t] = s;
      }
    }
  }
  return AffineOracle(concat, p.wo, &p.bo);
}

// z' = z + MSA(LN(z)); out = z' + W2 GELU(W1 LN(z') + b1) + b2.
inline Mat BlockOracle(const Mat& z, const nn::TransformerBlockParams& p, int heads,
                       double eps) {
  const Mat zp = AddOracle(z, MsaOracle(LayerNormOracle(z, p.ln1_g, p.ln1_b, eps), p.attn,
                                        heads));
  Mat hidden = AffineOracle(LayerNormOracle(zp, p.ln2_g, p.ln2_b, eps), p.fc1.w, &p.fc1.b);
  for (auto& row : hidden) {
    for (double& v : row) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
  }
  return AddOracle(zp, AffineOracle(hidden, p.fc2.w, &p.fc2.b));
}

// Channels-last, row-major tokens of a [c,h,w] map.
inline Mat TokensOracle(const Tensor& map) {
  const int c = map.dim(0), hw = map.dim(1) * map.dim(2);
  Mat out(hw, std::vector<double>(c));
  for (int p = 0; p < hw; ++p) {
    for (int ch = 0; ch < c; ++ch) out[p][ch] = map[ch * hw + p];
  }
  return out;
}

inline std::vector<double> MeanWordsOracle(const Tensor& lang) {
  const int ct = lang.dim(0), t = lang.dim(1);
  std::vector<double> out(ct, 0.0);
  for (int c = 0; c < ct; ++c) {
    for (int k = 0; k < t; ++k) out[c] += lang[c * t + k];
    out[c] /= t;
  }
  return out;
}

struct ScaleOracle {
  Mat z_h, z_l;
};

inline ScaleOracle ScaleSpecificOracle(const nn::FeaturePyramid& p,
                                       const nn::LgceParams& params,
                                       const nn::LgceConfig& cfg) {
  const Mat lbar = {MeanWordsOracle(p.lang)};
  Mat zh = AffineOracle(lbar, params.f_h.w, &params.f_h.b);
  for (const auto& row : TokensOracle(p.v3)) zh.push_back(row);
  Mat zl = AffineOracle(lbar, params.f_l.w, &params.f_l.b);
  for (const auto& row : TokensOracle(p.v4)) zl.push_back(row);
  for (const auto& b : params.tl_h) zh = BlockOracle(zh, b, cfg.heads, cfg.eps);
  for (const auto& b : params.tl_l) zl = BlockOracle(zl, b, cfg.heads, cfg.eps);
  return {zh, zl};
}

// One cross-scale layer: sequence [aligned language ; visual], LN, MSA, then
// the residual chosen by the config.
inline Mat CrossOracle(const std::vector<double>& other_lang, const nn::LinearParams& align,
                       const Mat& visual, const nn::AttentionLayerParams& p,
                       const nn::LgceConfig& cfg) {
  Mat seq = AffineOracle({other_lang}, align.w, &align.b);
  for (const auto& row : visual) seq.push_back(row);
  const Mat attended = MsaOracle(LayerNormOracle(seq, p.ln_g, p.ln_b, cfg.eps), p.attn,
                                 cfg.heads);
  Mat residual = seq;
  if (cfg.residual == nn::ResidualMode::kLanguageOnly) {
    for (std::size_t r = 1; r < residual.size(); ++r) {
      std::fill(residual[r].begin(), residual[r].end(), 0.0);
    }
  }
  return AddOracle(residual, attended);
}

inline ScaleOracle CrossScaleOracle(const Mat& z_h, const Mat& z_l,
                                    const nn::LgceParams& params,
                                    const nn::LgceConfig& cfg) {
  const Mat vh(z_h.begin() + 1, z_h.end()), vl(z_l.begin() + 1, z_l.end());
  return {CrossOracle(z_l[0], params.f_l_prime, vh, params.msa_h, cfg),
          CrossOracle(z_h[0], params.f_h_prime, vl, params.msa_l, cfg)};
}

// Flat [c3 + c4, h3, w3] output.
inline std::vector<double> ForwardOracle(const nn::FeaturePyramid& p,
                                         const nn::LgceParams& params,
                                         const nn::LgceConfig& cfg) {
  const ScaleOracle s = ScaleSpecificOracle(p, params, cfg);
  const ScaleOracle x = CrossScaleOracle(s.z_h, s.z_l, params, cfg);
  std::vector<double> out;
  for (int ch = 0; ch < cfg.c3 + cfg.c4; ++ch) {
    for (int r = 0; r < cfg.h3; ++r) {
      for (int c = 0; c < cfg.w3; ++c) {
        out.push_back(ch < cfg.c3 ? x.z_h[1 + r * cfg.w3 + c][ch]
                                  : x.z_l[1 + (r / 2) * cfg.w4 + c / 2][ch - cfg.c3]);
      }
    }
  }
  return out;
}

// Same-padded k x k convolution on flat [c,h,w] data.
inline std::vector<double> ConvOracle(const std::vector<double>& x, int ci, int h, int w,
                                      const Tensor& wt, const Tensor& b) {
  const int co = wt.dim(0), k = wt.dim(2), pad = k / 2;
  std::vector<double> out(static_cast<std::size_t>(co) * h * w);
  for (int o = 0; o < co; ++o) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double s = b[o];
        for (int i = 0; i < ci; ++i) {
          for (int dy = 0; dy < k; ++dy) {
            for (int dx = 0; dx < k; ++dx) {
              const int rr = r + dy - pad, cc = c + dx - pad;
              if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
              s += wt[((o * ci + i) * k + dy) * k + dx] * x[(i * h + rr) * w + cc];
            }
          }
        }
        out[(o * h + r) * w + c] = s;
      }
    }
  }
  return out;
}

inline std::vector<double> ConvBnReluOracle(const std::vector<double>& x, int ci, int h,
                                            int w, const nn::ConvBnParams& p, double eps) {
  std::vector<double> y = ConvOracle(x, ci, h, w, p.w, p.b);
  const int co = p.w.dim(0);
  for (int o = 0; o < co; ++o) {
    for (int i = 0; i < h * w; ++i) {
      double& v = y[o * h * w + i];
      v = p.gamma[o] * (v - p.mean[o]) / std::sqrt(p.var[o] + eps) + p.beta[o];
      v = std::max(v, 0.0);
    }
  }
  return y;
}

inline std::vector<double> DecoderOracle(const Tensor& fused, const nn::DecoderParams& p) {
  const int c = fused.dim(0), h = fused.dim(1), w = fused.dim(2);
  const int mid = p.block1.w.dim(0);
  const auto a = ConvBnReluOracle(fused.data(), c, h, w, p.block1, p.eps);
  const auto b = ConvBnReluOracle(a, mid, h, w, p.block2, p.eps);
  return ConvOracle(b, mid, h, w, p.out_w, p.out_b);
}

}  // namespace refseg::testing

#endif  // REFSEG_TESTS_LGCE_ORACLE_H_
