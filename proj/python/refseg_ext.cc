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

// Python bindings for the refseg core: taxonomy, expressions, mask
// generation, metrics, tiling and the command-line entry point.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "refseg/cli.h"
#include "refseg/dataset.h"
#include "refseg/error.h"
#include "refseg/exprgen.h"
#include "refseg/maskgen.h"
#include "refseg/metrics.h"
#include "refseg/raster.h"
#include "refseg/taxonomy.h"

namespace py = pybind11;

namespace refseg {
namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Taxonomy TaxonomyFrom(const std::optional<std::string>& path) {
  return path ? LoadTaxonomy(*path) : RefSegRsTaxonomy();
}

std::pair<int, int> Dims2d(const U8Array& a, const char* what) {
  if (a.ndim() != 2) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be a 2-D array");
  }
  return {static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))};
}

LabelMap ToLabelMap(const U8Array& a, const Taxonomy& taxonomy) {
  const auto [w, h] = Dims2d(a, "labels");
  LabelMap map{w, h, std::vector<ClassId>(a.data(), a.data() + a.size())};
  ValidateLabelMap(map, taxonomy.ClassIds());
  return map;
}

BinaryMask ToMask(const U8Array& a, const char* what) {
  const auto [w, h] = Dims2d(a, what);
  BinaryMask m = BinaryMask::Empty(w, h);
  for (py::ssize_t i = 0; i < a.size(); ++i) m.bits[i] = a.data()[i] != 0;
  return m;
}

U8Array FromMask(const BinaryMask& m) {
  U8Array out({m.height, m.width});
  std::copy(m.bits.begin(), m.bits.end(), out.mutable_data());
  return out;
}

py::dict ExpressionDict(const Expression& e, const std::vector<ExpressionSpan>& spans) {
  py::dict d;
  d["text"] = e.text;
  d["category"] = e.category;
  d["attribute"] = e.attribute ? py::cast(*e.attribute) : py::none();
  d["relation"] = e.relation ? py::cast(*e.relation) : py::none();
  py::list span_list;
  for (const ExpressionSpan& s : spans) {
    span_list.append(py::make_tuple(std::string(SpanRoleName(s.role)), s.start, s.end));
  }
  d["spans"] = span_list;
  return d;
}

py::dict Described(const Taxonomy& t, const Expression& e) {
  return ExpressionDict(e, Render(t, e.category, e.attribute, e.relation).spans);
}

}  // namespace
}  // namespace refseg

PYBIND11_MODULE(_refseg, m) {
  using namespace refseg;
  m.doc() = "Referring-segmentation dataset toolkit";

  // The module attribute keeps the exception type alive.
  static PyObject* error_type = py::exception<Error>(m, "RefSegError").ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = py::handle(error_type)(py::str(e.what()));
      instance.attr("code") = std::string(ErrorCodeName(e.code()));
      PyErr_SetObject(error_type, instance.ptr());
    }
  });

  m.def(
      "taxonomy_json",
      [](std::optional<std::string> path) { return SerializeTaxonomy(TaxonomyFrom(path)); },
      py::arg("path") = py::none(), "Canonical JSON of the bundled or a custom taxonomy.");
  m.def(
      "taxonomy_hash",
      [](std::optional<std::string> path) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(TaxonomyHash(TaxonomyFrom(path))));
        return std::string(buf);
      },
      py::arg("path") = py::none());

  m.def(
      "enumerate_expressions",
      [](std::optional<std::string> path) {
        const Taxonomy t = TaxonomyFrom(path);
        py::list out;
        for (const Expression& e : EnumerateExpressions(t)) out.append(Described(t, e));
        return out;
      },
      py::arg("taxonomy") = py::none());
  m.def(
      "parse_expression",
      [](const std::string& text, std::optional<std::string> path) {
        const Taxonomy t = TaxonomyFrom(path);
        return Described(t, Parse(text, t));
      },
      py::arg("text"), py::arg("taxonomy") = py::none());
  m.def(
      "render_expression",
      [](const std::string& category, std::optional<std::string> attribute,
         std::optional<std::string> relation, std::optional<std::string> path) {
        return Described(TaxonomyFrom(path),
                         MakeExpression(TaxonomyFrom(path), category, attribute, relation));
      },
      py::arg("category"), py::arg("attribute") = py::none(), py::arg("relation") = py::none(),
      py::arg("taxonomy") = py::none());
  m.def(
      "word_counts",
      [](const std::vector<std::string>& texts) { return WordCloudCounts(texts); },
      py::arg("texts"));

  m.def(
      "generate_mask",
      [](const U8Array& labels, const std::string& expression, int buffer_radius,
         double tau_on, double tau_surround, int connectivity, std::optional<std::string> path) {
        const Taxonomy t = TaxonomyFrom(path);
        SpatialPredicateConfig cfg{buffer_radius, tau_on, tau_surround, connectivity};
        cfg.Validate();
        const LabelMap map = ToLabelMap(labels, t);
        const Expression e = Parse(expression, t);
        BinaryMask mask;
        {
          py::gil_scoped_release release;
          mask = GenerateMask(map, t, e, cfg);
        }
        return FromMask(mask);
      },
      py::arg("labels"), py::arg("expression"), py::arg("buffer_radius") = 3,
      py::arg("tau_on") = 0.5, py::arg("tau_surround") = 0.8, py::arg("connectivity") = 8,
      py::arg("taxonomy") = py::none(),
      "Binary ground-truth mask (0/1, uint8) of `expression` over a class-id raster.");

  m.def(
      "iou_counts",
      [](const U8Array& pred, const U8Array& gt) {
        const IouCounts c = CountIou(ToMask(pred, "pred"), ToMask(gt, "gt"));
        return py::make_tuple(c.intersection, c.union_);
      },
      py::arg("pred"), py::arg("gt"));
  m.def(
      "iou", [](const U8Array& pred, const U8Array& gt) {
        return Iou(ToMask(pred, "pred"), ToMask(gt, "gt"));
      },
      py::arg("pred"), py::arg("gt"));
  m.def(
      "summarize",
      [](const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs,
         std::optional<std::vector<double>> thresholds, bool inclusive) {
        std::vector<IouCounts> counts;
        for (const auto& [i, u] : pairs) counts.push_back({i, u});
        const EvalReport r =
            Summarize(counts, thresholds.value_or(kDefaultThresholds), inclusive);
        py::dict d;
        d["pr"] = r.pr;
        d["oiou"] = r.oiou;
        d["miou"] = r.miou;
        d["n"] = r.n;
        return d;
      },
      py::arg("counts"), py::arg("thresholds") = py::none(), py::arg("inclusive") = false,
      "Pr@threshold, oIoU and mIoU from (intersection, union) pairs.");

  m.def(
      "tile_crops",
      [](int width, int height, int window, int stride) {
        TileSpec spec;
        spec.window = window;
        spec.stride = stride;
        spec.Validate();
        py::list out;
        for (const CropRect& c : TileCrops(width, height, spec)) {
          out.append(py::make_tuple(c.x, c.y, c.side));
        }
        return out;
      },
      py::arg("width"), py::arg("height"), py::arg("window") = 1200, py::arg("stride") = 600);
  m.def(
      "allocate_scene_counts",
      [](int scenes, std::array<double, 3> fractions) {
        return AllocateSceneCounts(scenes, fractions);
      },
      py::arg("scenes"), py::arg("fractions") = kDefaultSplitFractions);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> argv = {"refseg"};
        argv.insert(argv.end(), args.begin(), args.end());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = RunCli(argv, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a refseg subcommand; returns (exit_code, stdout, stderr).");
}
