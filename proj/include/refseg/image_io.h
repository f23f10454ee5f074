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

#ifndef REFSEG_IMAGE_IO_H_
#define REFSEG_IMAGE_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "refseg/raster.h"

namespace refseg {

// Strict reader: the file must be an 8-bit single-channel (greyscale) PNG.
// Anything else raises DecodeError.
LabelMap ReadGrayPng(const std::string& path);

// Permissive reader for display imagery: palette, greyscale, 16-bit and
// alpha inputs are all converted to 8-bit RGB.
RgbImage ReadRgbPng(const std::string& path);

// Mask convention: 0 background, 255 foreground. Reading treats any
// non-zero sample as foreground.
BinaryMask ReadMaskPng(const std::string& path);
void WriteMaskPng(const std::string& path, const BinaryMask& mask);

void WriteGrayPng(const std::string& path, int width, int height,
                  std::span<const std::uint8_t> pixels);
void WriteRgbPng(const std::string& path, const RgbImage& image);
std::string EncodeRgbPng(const RgbImage& image);

void WriteLabelPng(const std::string& path, const LabelMap& map);

}  // namespace refseg

#endif  // REFSEG_IMAGE_IO_H_
