# Copyright 2026 The RefSeg Toolkit Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Smoke tests for the Python extension, checked against numpy references."""

import json
import os
import pathlib

import numpy as np
import pytest

import refseg

SOURCE_DIR = pathlib.Path(
    os.environ.get("REFSEG_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))

CAR, PAVED_ROAD, PARKING, BUILDING, LOW_VEG = 11, 1, 3, 10, 0


def test_taxonomy_json_matches_bundled_file():
    bundled = (SOURCE_DIR / "data" / "refsegrs_taxonomy.json").read_text()
    assert refseg.taxonomy_json() == bundled
    doc = json.loads(bundled)
    assert len(doc["classes"]) == 20
    assert len(refseg.taxonomy_hash()) == 16


def test_enumeration_count_matches_document():
    doc = json.loads(refseg.taxonomy_json())
    expected = 0
    for cat in doc["categories"]:
        if not cat["referable"]:
            continue
        attrs = sum(cat["name"] == a["category"] for a in doc["attributes"])
        rels = sum(cat["name"] in r["subjects"] for r in doc["relations"])
        expected += (1 + attrs) * (1 + rels)
    exprs = refseg.enumerate_expressions()
    assert len(exprs) == expected
    for e in exprs:
        assert refseg.parse_expression(e["text"]) == e


def test_spans_cover_roles():
    e = refseg.render_expression("vehicle", "light-duty", "driving on the road")
    assert e["text"] == "light-duty vehicle driving on the road"
    assert e["spans"] == [("attribute", 0, 10), ("category", 11, 18),
                          ("relation", 19, 38)]


def test_errors_carry_codes():
    with pytest.raises(refseg.RefSegError) as info:
        refseg.render_expression("spaceship")
    assert info.value.code == "InvalidCombination"
    with pytest.raises(refseg.RefSegError) as info:
        refseg.parse_expression("purple car")
    assert info.value.code in {"UnrecognizedPhrase", "UnrecognizedCategory"}
    with pytest.raises(refseg.RefSegError) as info:
        refseg.generate_mask(np.full((3, 3), 99, np.uint8), "car")
    assert info.value.code == "UnknownClassId"


def test_category_mask_equals_class_membership():
    rng = np.random.default_rng(3)
    labels = rng.choice([LOW_VEG, PAVED_ROAD, CAR, BUILDING, 14, 16], size=(20, 17))
    labels = labels.astype(np.uint8)
    got = refseg.generate_mask(labels, "vehicle")
    want = np.isin(labels, [11, 12, 13, 14, 15, 16]).astype(np.uint8)
    np.testing.assert_array_equal(got, want)
    heavy = refseg.generate_mask(labels, "heavy-duty vehicle")
    np.testing.assert_array_equal(heavy, np.isin(labels, [14, 15, 16]).astype(np.uint8))


def test_containment_relation_selects_instances():
    labels = np.zeros((12, 12), np.uint8)
    labels[0:6, 0:6] = PARKING
    labels[2:4, 2:4] = CAR          # fully inside the parking lot
    labels[9:11, 8:10] = CAR        # on low vegetation
    got = refseg.generate_mask(labels, "car in the parking area", buffer_radius=1)
    want = np.zeros_like(labels)
    want[2:4, 2:4] = 1
    np.testing.assert_array_equal(got, want)


def test_iou_and_summary_match_numpy():
    rng = np.random.default_rng(7)
    pairs = []
    for _ in range(50):
        a = rng.random((9, 11)) < 0.4
        b = rng.random((9, 11)) < 0.4
        inter, union = int((a & b).sum()), int((a | b).sum())
        assert refseg.iou_counts(a.astype(np.uint8), b.astype(np.uint8)) == (inter, union)
        pairs.append((inter, union))
    report = refseg.summarize(pairs)
    assert report["oiou"] == sum(i for i, _ in pairs) / sum(u for _, u in pairs)
    assert report["n"] == 50
    contrast = refseg.summarize([(2, 4), (9, 10)])
    assert contrast["miou"] == pytest.approx(0.7, abs=1e-15)
    assert contrast["oiou"] == 11 / 14


def test_tiling_and_allocation():
    assert len(refseg.tile_crops(5616, 3744)) == 40
    assert refseg.tile_crops(1200, 1200) == [(0, 0, 1200)]
    assert refseg.allocate_scene_counts(285) == [151, 31, 103]


def test_cli_round_trip(tmp_path):
    code, out, err = refseg.run_cli(["taxonomy"])
    assert code == 0 and err == ""
    assert out == refseg.taxonomy_json()
    code, _, err = refseg.run_cli(["generate", "--scenes", str(tmp_path / "none"),
                                   "--out", str(tmp_path / "out")])
    assert code == 2 and "not found" in err
