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

#include "refseg/lgce_check.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <numeric>
#include <random>

#include "refseg/gradcheck.h"

namespace refseg::nn {

namespace {

std::string Printf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Printf(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

bool BitEqual(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(double)) == 0;
}

// Pyramid tensors first, then every parameter in visiting order.
struct Packed {
  std::vector<Tensor> values;
  std::vector<std::string> names;
};

Packed Pack(const FeaturePyramid& p, const LgceParams& params) {
  Packed out{{p.v3, p.v4, p.lang}, {"V3", "V4", "lang"}};
  params.ForEach([&](const std::string& name, const Tensor& t) {
    out.values.push_back(t);
    out.names.push_back(name);
  });
  return out;
}

void Unpack(const std::vector<Tensor>& values, FeaturePyramid* p, LgceParams* params) {
  p->v3 = values[0];
  p->v4 = values[1];
  p->lang = values[2];
  std::size_t i = 3;
  params->ForEach([&](const std::string&, Tensor& t) { t = values[i++]; });
}

// Returns the output of a tracked forward pass and the gradient of
// sum(output) for every packed tensor.
struct ForwardBackward {
  Tensor output;
  std::vector<std::vector<double>> grads;
  std::vector<std::string> names;
};

ForwardBackward RunTracked(const FeaturePyramid& p, const LgceParams& params,
                           const LgceConfig& cfg) {
  Packed packed = Pack(p, params);
  Tape tape;
  std::vector<Tensor> watched;
  for (const Tensor& t : packed.values) watched.push_back(tape.Watch(t));
  FeaturePyramid wp;
  LgceParams wparams = params;
  Unpack(watched, &wp, &wparams);
  const Tensor out = LgceForward(wp, wparams, cfg);
  tape.Backward(Sum(out));
  ForwardBackward fb{out.Detached(), {}, packed.names};
  for (const Tensor& t : watched) fb.grads.push_back(tape.Grad(t));
  return fb;
}

LgceConfig RandomConfig(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  static constexpr int kHeads[] = {1, 2, 4};
  LgceConfig cfg;
  cfg.heads = kHeads[pick(0, 2)];
  auto channels = [&] {
    const int lo = (4 + cfg.heads - 1) / cfg.heads, hi = 32 / cfg.heads;
    return cfg.heads * pick(lo, hi);
  };
  cfg.c3 = channels();
  cfg.c4 = channels();
  cfg.ct = pick(1, 8);
  cfg.h4 = pick(1, 4);
  cfg.w4 = pick(1, 4);
  cfg.h3 = 2 * cfg.h4;
  cfg.w3 = 2 * cfg.w4;
  cfg.mlp_ratio = pick(1, 4);
  return cfg;
}

template <typename Fn>
CheckResult Timed(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = fn();
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

CheckResult CheckLgceGradients(const LgceConfig& cfg, int words, std::uint64_t seed,
                               bool inject_fault) {
  CheckResult r;
  r.name = Printf("gradients/seed=%llu", static_cast<unsigned long long>(seed));
  const LgceParams params = InitLgceParams(cfg, {seed, false});
  const FeaturePyramid pyramid = RandomPyramid(cfg, words, seed ^ 0x9e3779b97f4a7c15ULL);
  ParamInit weight_init(seed + 17);
  const Tensor weights =
      weight_init.Uniform({cfg.c3 + cfg.c4, cfg.h3, cfg.w3}, 1);
  const Packed packed = Pack(pyramid, params);

  ScalarFn fn = [&](const std::vector<Tensor>& in) {
    FeaturePyramid p;
    LgceParams ps = params;
    Unpack(in, &p, &ps);
    return WeightedSum(LgceForward(p, ps, cfg), weights);
  };
  GradCheckOptions opts;
  if (inject_fault) {
    opts.fault = [](const std::string& name, std::vector<double>& g) {
      if (name == "msa_h.attn.wv") g[0] += 1e-3 + 1e-2 * std::abs(g[0]);
    };
  }
  const auto results = CheckGradients(fn, packed.values, packed.names, opts);
  std::size_t entries = 0, failures = 0, groups_failed = 0;
  const GradCheckResult* worst = &results[0];
  double max_abs = 0.0;
  for (const auto& g : results) {
    entries += g.entries;
    failures += g.failures;
    if (!g.passed()) ++groups_failed;
    if (g.max_rel_err > worst->max_rel_err) worst = &g;
    max_abs = std::max(max_abs, g.max_abs_err);
  }
  r.passed = failures == 0;
  r.detail = Printf("%zu groups, %zu entries, %zu failed in %zu groups; max abs %.1e, "
                    "max rel %.1e (%s)",
                    results.size(), entries, failures, groups_failed, max_abs,
                    worst->max_rel_err, worst->name.c_str());
  return r;
}

CheckResult CheckDecoderGradients(std::uint64_t seed) {
  CheckResult r;
  r.name = "decoder gradients";
  const int c_in = 5, c_mid = 3, h = 4, w = 3;
  const DecoderParams params = InitDecoder(c_in, c_mid, seed, /*random_stats=*/true);
  ParamInit init(seed + 1);
  const Tensor x = init.Uniform({c_in, h, w}, 1);
  const Tensor weights = init.Uniform({1, h, w}, 1);
  std::vector<Tensor> values{x};
  std::vector<std::string> names{"x"};
  params.ForEach([&](const std::string& n, const Tensor& t) {
    values.push_back(t);
    names.push_back(n);
  });
  ScalarFn fn = [&](const std::vector<Tensor>& in) {
    DecoderParams p = params;
    std::size_t i = 1;
    p.ForEach([&](const std::string&, Tensor& t) { t = in[i++]; });
    return WeightedSum(DecoderHead(in[0], p), weights);
  };
  const auto results = CheckGradients(fn, values, names);
  std::size_t failures = 0;
  double worst = 0.0;
  for (const auto& g : results) {
    failures += g.failures;
    worst = std::max(worst, g.max_rel_err);
  }
  r.passed = failures == 0;
  r.detail = Printf("%zu groups, %zu failed entries, worst rel %.2e", results.size(),
                    failures, worst);
  return r;
}

CheckResult CheckShapeContract(int trials, std::uint64_t seed) {
  CheckResult r;
  r.name = "shape contract";
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    const LgceConfig cfg = RandomConfig(rng);
    const int words = std::uniform_int_distribution<int>(1, 8)(rng);
    const LgceParams params = InitLgceParams(cfg, {rng(), false});
    const FeaturePyramid p = RandomPyramid(cfg, words, rng());
    LgceTrace trace;
    const Tensor out = LgceForward(p, params, cfg, &trace);
    const Shape expected{cfg.c3 + cfg.c4, cfg.h3, cfg.w3};
    const bool ok =
        out.shape() == expected &&
        trace.scale_specific.z_h.shape() == Shape{1 + cfg.h3 * cfg.w3, cfg.c3} &&
        trace.scale_specific.z_l.shape() == Shape{1 + cfg.h4 * cfg.w4, cfg.c4} &&
        trace.cross_scale.z_h.shape() == trace.scale_specific.z_h.shape() &&
        trace.cross_scale.z_l.shape() == trace.scale_specific.z_l.shape();
    if (!ok) {
      r.detail = Printf("config %d (c3=%d c4=%d heads=%d %dx%d): got %s", t, cfg.c3, cfg.c4,
                        cfg.heads, cfg.h4, cfg.w4, ShapeString(out.shape()).c_str());
      return r;
    }
  }
  r.passed = true;
  r.detail = Printf("%d random configs", trials);
  return r;
}

CheckResult CheckIdentityAtZero(const LgceConfig& cfg, int words, std::uint64_t seed) {
  CheckResult r;
  r.name = "identity at zero";
  LgceConfig full = cfg;
  full.residual = ResidualMode::kFullSequence;
  const LgceParams params = InitLgceParams(full, {seed, true});
  const FeaturePyramid p = RandomPyramid(full, words, seed + 1);
  const Tensor out = LgceForward(p, params, full);
  const Tensor parts[] = {p.v3, UpsampleNearest2x(p.v4)};
  const Tensor expected = Concat(parts, 0);
  r.passed = BitEqual(out, expected);
  r.detail = r.passed ? "output == concat(V3, upsample(V4)) bit-exact"
                      : "output differs from the raw upsample-and-concat";
  return r;
}

CheckResult CheckPermutationInvariance(const LgceConfig& cfg, int words,
                                       std::uint64_t seed) {
  CheckResult r;
  r.name = "word permutation";
  const LgceParams params = InitLgceParams(cfg, {seed, false});
  FeaturePyramid p = RandomPyramid(cfg, words, seed + 2);
  const Tensor reference = LgceForward(p, params, cfg);
  std::mt19937_64 rng(seed + 3);
  std::vector<int> order(words);
  const int kTrials = 10;
  for (int t = 0; t < kTrials; ++t) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> permuted(p.lang.numel());
    for (int c = 0; c < cfg.ct; ++c) {
      for (int k = 0; k < words; ++k) permuted[c * words + k] = p.lang[c * words + order[k]];
    }
    FeaturePyramid q = p;
    q.lang = Tensor(p.lang.shape(), std::move(permuted));
    if (!BitEqual(LgceForward(q, params, cfg), reference)) {
      r.detail = Printf("permutation %d changed the output", t);
      return r;
    }
  }
  r.passed = true;
  r.detail = Printf("%d permutations of %d words, bit-identical", kTrials, words);
  return r;
}

CheckResult CheckSplitConcatInverse(std::uint64_t seed) {
  CheckResult r;
  r.name = "split/concat inverse";
  std::mt19937_64 rng(seed);
  ParamInit init(seed + 4);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  const int kTrials = 100;
  for (int t = 0; t < kTrials; ++t) {
    const int rows = pick(1, 6), cols = pick(1, 6), width = pick(1, 8);
    const Tensor lang = init.Uniform({1, width}, 1);
    const Tensor visual = init.Uniform({rows, width}, 1);
    const Tensor seq_parts[] = {lang, visual};
    const SplitTokens s = SplitScale(Concat(seq_parts, 0));
    const Tensor a = init.Uniform({rows, cols, width}, 1);
    const Tensor b = init.Uniform({rows, pick(1, 6), width}, 1);
    const Tensor ab[] = {a, b};
    const auto parts = Split(Concat(ab, 1), {a.dim(1), b.dim(1)}, 1);
    if (!BitEqual(s.lang, lang) || !BitEqual(s.visual, visual) || !BitEqual(parts[0], a) ||
        !BitEqual(parts[1], b)) {
      r.detail = Printf("trial %d not restored", t);
      return r;
    }
  }
  r.passed = true;
  r.detail = Printf("%d random pairs restored bit-exact", kTrials);
  return r;
}

CheckResult CheckAttentionRows(const LgceConfig& cfg, int words, std::uint64_t seed) {
  CheckResult r;
  r.name = "attention rows";
  const LgceParams params = InitLgceParams(cfg, {seed, false});
  const FeaturePyramid p = RandomPyramid(cfg, words, seed + 5);
  LgceTrace trace;
  LgceForward(p, params, cfg, &trace);
  double worst = 0.0;
  std::size_t rows = 0;
  for (const AttentionSite& site : trace.attention) {
    for (const Tensor& weights : AttentionWeights(site.input, *site.params, cfg.heads)) {
      const int n = weights.dim(0);
      for (int i = 0; i < n; ++i) {
        double total = 0.0;
        for (int j = 0; j < n; ++j) total += weights[i * n + j];
        worst = std::max(worst, std::abs(total - 1.0));
        ++rows;
      }
    }
  }
  r.passed = worst <= 1e-12;
  r.detail = Printf("%zu sites, %zu rows, max |sum-1| = %.3e", trace.attention.size(), rows,
                    worst);
  return r;
}

CheckResult CheckDeterminism(const LgceConfig& cfg, int words, std::uint64_t seed) {
  CheckResult r;
  r.name = "determinism";
  auto run = [&] {
    return RunTracked(RandomPyramid(cfg, words, seed + 6), InitLgceParams(cfg, {seed, false}),
                      cfg);
  };
  const ForwardBackward a = run();
  const ForwardBackward b = run();
  bool same = BitEqual(a.output, b.output);
  for (std::size_t i = 0; same && i < a.grads.size(); ++i) same = a.grads[i] == b.grads[i];
  r.passed = same;
  r.detail = same ? "forward and backward bit-identical across runs"
                  : "repeated run differs";
  return r;
}

CheckResult CheckDeadParameters(const LgceConfig& cfg, int words, std::uint64_t seed) {
  CheckResult r;
  r.name = "dead parameters";
  const ForwardBackward fb = RunTracked(RandomPyramid(cfg, words, seed + 7),
                                        InitLgceParams(cfg, {seed, false}), cfg);
  std::size_t scalars = 0;
  std::vector<std::string> dead;
  for (std::size_t i = 0; i < fb.grads.size(); ++i) {
    const auto& g = fb.grads[i];
    scalars += g.size();
    if (std::any_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) {
      dead.push_back(fb.names[i]);
    }
  }
  r.passed = dead.empty();
  if (r.passed) {
    r.detail = Printf("%zu tensors, %zu scalars, all with nonzero gradient", fb.grads.size(),
                      scalars);
  } else {
    r.detail = "zero gradient entries in:";
    for (const auto& name : dead) r.detail += " " + name;
  }
  return r;
}

std::vector<CheckResult> RunLgceChecks(const LgceCheckOptions& opts) {
  const LgceConfig& cfg = opts.fixture;
  const int words = opts.words;
  const std::uint64_t seed = opts.seed;
  std::vector<CheckResult> out;
  for (int s = 0; s < opts.grad_seeds; ++s) {
    out.push_back(Timed([&] {
      return CheckLgceGradients(cfg, words, seed + s, opts.inject_gradient_fault && s == 0);
    }));
  }
  out.push_back(Timed([&] { return CheckDecoderGradients(seed); }));
  out.push_back(Timed([&] { return CheckShapeContract(opts.shape_trials, seed); }));
  out.push_back(Timed([&] { return CheckIdentityAtZero(cfg, words, seed); }));
  out.push_back(Timed([&] { return CheckPermutationInvariance(cfg, words, seed); }));
  out.push_back(Timed([&] { return CheckSplitConcatInverse(seed); }));
  out.push_back(Timed([&] { return CheckAttentionRows(cfg, words, seed); }));
  out.push_back(Timed([&] { return CheckDeterminism(cfg, words, seed); }));
  out.push_back(Timed([&] { return CheckDeadParameters(cfg, words, seed); }));
  return out;
}

std::string FormatCheckTable(const std::vector<CheckResult>& results) {
  std::size_t width = 5;
  for (const auto& r : results) width = std::max(width, r.name.size());
  std::string out;
  for (const auto& r : results) {
    out += Printf("%-4s  %-*s  %s\n", r.passed ? "PASS" : "FAIL", static_cast<int>(width),
                  r.name.c_str(), r.detail.c_str());
  }
  return out;
}

bool AllPassed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.passed; });
}

}  // namespace refseg::nn
