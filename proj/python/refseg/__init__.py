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

"""Referring-segmentation dataset toolkit."""

from ._refseg import (
    RefSegError,
    allocate_scene_counts,
    enumerate_expressions,
    generate_mask,
    iou,
    iou_counts,
    parse_expression,
    render_expression,
    run_cli,
    summarize,
    taxonomy_hash,
    taxonomy_json,
    tile_crops,
    word_counts,
)

__all__ = [
    "RefSegError",
    "allocate_scene_counts",
    "enumerate_expressions",
    "generate_mask",
    "iou",
    "iou_counts",
    "parse_expression",
    "render_expression",
    "run_cli",
    "summarize",
    "taxonomy_hash",
    "taxonomy_json",
    "tile_crops",
    "word_counts",
]
