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

#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "hoptex/tensor.hpp"

namespace hoptex {

/// Decodes an 8-bit PNG (gray, gray+alpha, RGB or RGBA). Alpha is dropped;
/// 16-bit and palette images are converted to 8-bit gray/RGB.
Image load_image(const std::filesystem::path& path);

/// Writes an 8-bit gray or RGB PNG.
void save_image(const Image& img, const std::filesystem::path& path);

struct StridedCrop {
  int stride = 1;
};

struct RandomCrop {
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

using CropMode = std::variant<StridedCrop, RandomCrop>;

/// Crops square patches of side `patch_size`. Strided mode walks top-left
/// corners in scan order; random mode draws corners uniformly with
/// replacement.
std::vector<PatchTensor> extract_patches(const Image& img, int patch_size,
                                         const CropMode& mode);

/// Number of patches strided extraction yields.
std::size_t strided_patch_count(int height, int width, int patch_size,
                                int stride);

PatchTensor to_tensor(const Image& img);

/// Rounds and clamps to [0, 255].
Image to_image(const PatchTensor& t);

/// FNV-1a over dimensions and pixel bytes.
std::uint64_t image_hash(const Image& img);

}  // namespace hoptex
