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

#include "refseg/image_io.h"

#include <png.h>

#include <array>
#include <cstring>
#include <fstream>

namespace refseg {

namespace {

struct PngHeader {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
};

std::uint32_t BigEndian32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

// The simplified libpng API hides the source bit depth, so the IHDR chunk is
// inspected directly before decoding.
PngHeader ReadHeader(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::array<unsigned char, 29> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  static constexpr unsigned char kSignature[8] = {0x89, 'P', 'N', 'G',
                                                  '\r', '\n', 0x1a, '\n'};
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()) ||
      std::memcmp(bytes.data(), kSignature, 8) != 0 ||
      std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
    throw Error(ErrorCode::kDecodeError, "'" + path + "' is not a PNG file");
  }
  PngHeader header;
  header.width = static_cast<int>(BigEndian32(bytes.data() + 16));
  header.height = static_cast<int>(BigEndian32(bytes.data() + 20));
  header.bit_depth = bytes[24];
  header.color_type = bytes[25];
  return header;
}

std::vector<std::uint8_t> Decode(const std::string& path, png_uint_32 format,
                                 int& width, int& height) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::kDecodeError, path + ": " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kDecodeError, path + ": " + message);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return buffer;
}

png_image WriterFor(int width, int height, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  return image;
}

void Write(const std::string& path, int width, int height, png_uint_32 format,
           const std::uint8_t* data) {
  png_image image = WriterFor(width, height, format);
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    throw Error(ErrorCode::kIoError, "cannot write '" + path + "': " + image.message);
  }
}

void CheckSize(int width, int height, std::size_t samples, int channels) {
  if (width <= 0 || height <= 0 ||
      samples != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorCode::kInvalidArgument, "raster buffer does not match dimensions");
  }
}

}  // namespace

LabelMap ReadGrayPng(const std::string& path) {
  const PngHeader header = ReadHeader(path);
  if (header.color_type != PNG_COLOR_TYPE_GRAY || header.bit_depth != 8) {
    throw Error(ErrorCode::kDecodeError,
                "'" + path + "' is not an 8-bit single-channel PNG (bit depth " +
                    std::to_string(header.bit_depth) + ", color type " +
                    std::to_string(header.color_type) + ")");
  }
  LabelMap map;
  map.pixels = Decode(path, PNG_FORMAT_GRAY, map.width, map.height);
  return map;
}

RgbImage ReadRgbPng(const std::string& path) {
  ReadHeader(path);
  RgbImage image;
  image.rgb = Decode(path, PNG_FORMAT_RGB, image.width, image.height);
  return image;
}

BinaryMask ReadMaskPng(const std::string& path) {
  LabelMap raw = ReadGrayPng(path);
  BinaryMask mask;
  mask.width = raw.width;
  mask.height = raw.height;
  mask.bits.resize(raw.pixels.size());
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) {
    mask.bits[i] = raw.pixels[i] != 0 ? 1 : 0;
  }
  return mask;
}

void WriteMaskPng(const std::string& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> samples(mask.bits.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] = mask.bits[i] ? 255 : 0;
  }
  WriteGrayPng(path, mask.width, mask.height, samples);
}

void WriteGrayPng(const std::string& path, int width, int height,
                  std::span<const std::uint8_t> pixels) {
  CheckSize(width, height, pixels.size(), 1);
  Write(path, width, height, PNG_FORMAT_GRAY, pixels.data());
}

void WriteRgbPng(const std::string& path, const RgbImage& image) {
  CheckSize(image.width, image.height, image.rgb.size(), 3);
  Write(path, image.width, image.height, PNG_FORMAT_RGB, image.rgb.data());
}

std::string EncodeRgbPng(const RgbImage& image) {
  CheckSize(image.width, image.height, image.rgb.size(), 3);
  png_image writer = WriterFor(image.width, image.height, PNG_FORMAT_RGB);
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(writer, size, 0, image.rgb.data(), 0,
                                       nullptr)) {
    throw Error(ErrorCode::kIoError, std::string("png encode: ") + writer.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&writer, out.data(), &size, 0, image.rgb.data(),
                                 0, nullptr)) {
    throw Error(ErrorCode::kIoError, std::string("png encode: ") + writer.message);
  }
  out.resize(size);
  return out;
}

void WriteLabelPng(const std::string& path, const LabelMap& map) {
  WriteGrayPng(path, map.width, map.height, map.pixels);
}

}  // namespace refseg
