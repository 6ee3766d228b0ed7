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
#include <span>
#include <vector>

#include "hoptex/pipeline.hpp"

namespace hoptex {

inline constexpr char kModelMagic[8] = {'H', 'O', 'P', 'T', 'E', 'X', '\0', '\x1a'};
inline constexpr std::uint32_t kModelVersion = 1;

/// Versioned little-endian container. Matrices are written row-major as
/// u64 rows, u64 cols, then rows * cols IEEE-754 doubles.
std::vector<std::uint8_t> serialize(const TextureModel& model);

/// Throws FormatError (with the failing byte offset) on bad magic, version
/// mismatch, truncation or structurally inconsistent content.
TextureModel deserialize(std::span<const std::uint8_t> bytes);

void save_model(const TextureModel& model, const std::filesystem::path& path);
TextureModel load_model(const std::filesystem::path& path);

}  // namespace hoptex
