// Copyright 2026 The hoptex Authors
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

#include "hoptex/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>

#include "hoptex/error.hpp"
#include "hoptex/random.hpp"

namespace hoptex {

void Image::validate() const {
  if (height <= 0 || width <= 0) throw ArgumentError("image has empty dimensions");
  if (channels != 1 && channels != 3)
    throw ArgumentError("image must have 1 or 3 channels, got " + std::to_string(channels));
  if (data.size() != static_cast<std::size_t>(height) * width * channels)
    throw ArgumentError("image data length does not match its dimensions");
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError("not a PNG file: " + path.string());

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message,
                                           png_error_fn, png_warning_fn);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialisation failed");
  }

  Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG " + path.string() + ": " + message);
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unsupported PNG channel layout in " + path.string());
  }

  img = Image(height, width, channels);
  rows.resize(height);
  for (int y = 0; y < height; ++y)
    rows[y] = img.data.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  img.validate();
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());

  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message,
                                            png_error_fn, png_warning_fn);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialisation failed");
  }
  std::vector<png_bytep> rows(img.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.data.data()) +
              static_cast<std::size_t>(y) * img.width * img.channels;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw IoError("failed writing " + path.string());
}

std::size_t strided_patch_count(int height, int width, int patch_size, int stride) {
  if (patch_size > height || patch_size > width || stride <= 0) return 0;
  const std::size_t ny = static_cast<std::size_t>((height - patch_size) / stride + 1);
  const std::size_t nx = static_cast<std::size_t>((width - patch_size) / stride + 1);
  return ny * nx;
}

namespace {

PatchTensor crop(const Image& img, int y0, int x0, int size) {
  PatchTensor p(size, size, img.channels);
  auto out = p.data.begin();
  for (int y = 0; y < size; ++y) {
    const auto* row = img.data.data() +
                      (static_cast<std::size_t>(y0 + y) * img.width + x0) * img.channels;
    out = std::copy(row, row + static_cast<std::size_t>(size) * img.channels, out);
  }
  return p;
}

}  // namespace

std::vector<PatchTensor> extract_patches(const Image& img, int patch_size,
                                         const CropMode& mode) {
  img.validate();
  if (patch_size <= 0 || patch_size > std::min(img.height, img.width))
    throw ArgumentError("patch size " + std::to_string(patch_size) +
                        " does not fit a " + std::to_string(img.height) + "x" +
                        std::to_string(img.width) + " image");
  std::vector<PatchTensor> patches;
  if (const auto* strided = std::get_if<StridedCrop>(&mode)) {
    if (strided->stride <= 0) throw ArgumentError("stride must be positive");
    patches.reserve(strided_patch_count(img.height, img.width, patch_size, strided->stride));
    for (int y = 0; y + patch_size <= img.height; y += strided->stride)
      for (int x = 0; x + patch_size <= img.width; x += strided->stride)
        patches.push_back(crop(img, y, x, patch_size));
  } else {
    const auto& random = std::get<RandomCrop>(mode);
    Rng rng(random.seed);
    const auto ny = static_cast<std::uint64_t>(img.height - patch_size + 1);
    const auto nx = static_cast<std::uint64_t>(img.width - patch_size + 1);
    patches.reserve(random.count);
    for (std::size_t i = 0; i < random.count; ++i) {
      const int y = static_cast<int>(rng.below(ny));
      const int x = static_cast<int>(rng.below(nx));
      patches.push_back(crop(img, y, x, patch_size));
    }
  }
  return patches;
}

PatchTensor to_tensor(const Image& img) {
  PatchTensor t(img.height, img.width, img.channels);
  std::copy(img.data.begin(), img.data.end(), t.data.begin());
  return t;
}

Image to_image(const PatchTensor& t) {
  Image img(t.height, t.width, t.channels);
  std::transform(t.data.begin(), t.data.end(), img.data.begin(), [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  });
  return img;
}

std::uint64_t image_hash(const Image& img) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (int v : {img.height, img.width, img.channels})
    for (int i = 0; i < 4; ++i) mix(static_cast<std::uint8_t>(v >> (8 * i)));
  for (auto b : img.data) mix(b);
  return h;
}

}  // namespace hoptex
