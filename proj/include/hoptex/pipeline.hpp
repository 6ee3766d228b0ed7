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
#include <span>
#include <vector>

#include "hoptex/core_generator.hpp"
#include "hoptex/image_io.hpp"
#include "hoptex/saab.hpp"
#include "hoptex/tensor.hpp"

namespace hoptex {

/// Pixel intensities stay on the raw 0-255 scale; `gamma` is given on the
/// normalized [0, 1] scale and multiplied by the square of this factor.
inline constexpr double kIntensityScale = 255.0;

struct TrainConfig {
  int patch_size = 32;
  CropMode crop = StridedCrop{2};
  ChainConfig chain = ChainConfig::defaults();
  double gamma = 0.01;
  CoreConfig core{};
  std::uint64_t seed = 0;

  /// Throws ArgumentError on inconsistent settings.
  void validate() const;
};

/// Scalars the closed-form size equations need, as recorded at fit time.
struct ModelDims {
  int input_channels = 0;
  std::vector<int> windows;       // per hop
  std::vector<int> hop_channels;  // K_1 ... K_n
  int core_map = 0;               // spatial size of one core channel map
  int reduced_dim = 0;            // D_r
  int clusters = 0;               // N
  int cdfs = 0;                   // F
  int codewords = 0;              // W

  static ModelDims of(const HopChain& chain, const CoreModel& core);
  bool operator==(const ModelDims&) const = default;
};

struct Provenance {
  std::uint64_t exemplar_hash = 0;
  int exemplar_height = 0;
  int exemplar_width = 0;
  std::uint64_t training_patches = 0;
};

struct TextureModel {
  TrainConfig config;
  HopChain chain;
  CoreModel core;
  Provenance provenance;
  ModelDims declared;
  /// Runtime only; never written to the container.
  double analysis_seconds = 0.0;
};

/// Patch extraction, chain fit, SDR and core model fit.
TextureModel train(const Image& exemplar, const TrainConfig& config);

/// `count` patches, each from its own stream derived from (seed, index),
/// clamped to [0, 255] and rounded. `threads` <= 1 runs inline.
std::vector<PatchTensor> generate_patches(const TextureModel& model, std::size_t count,
                                          std::uint64_t seed, int threads = 1);

/// Forward chain followed by inverse chain.
PatchTensor reconstruct(const HopChain& chain, const PatchTensor& x);

}  // namespace hoptex
