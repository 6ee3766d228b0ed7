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

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "hoptex/tensor.hpp"

namespace hoptex {

struct QuiltConfig {
  int out_height = 256;
  int out_width = 256;
  /// Overlap width in pixels; 0 selects round(patch / 6).
  int overlap = 0;
  /// Candidates within (1 + tolerance) x best overlap error are eligible.
  double tolerance = 0.1;
  std::uint64_t seed = 0;
};

enum class SeamOrientation { kVertical, kHorizontal };

/// A monotone cut through an overlap region. Vertical seams give, for each
/// row, the first column taken from the new patch; horizontal seams give,
/// for each column, the first row taken from the new patch.
struct SeamCut {
  SeamOrientation orientation = SeamOrientation::kVertical;
  std::vector<int> path;
  double cost = 0.0;
};

/// Minimum cumulative-error monotone path (adjacent indices differ by at
/// most 1). Vertical paths run top to bottom over the columns of `errors`;
/// horizontal paths run left to right over its rows. Among equal-cost paths
/// the lexicographically smallest is returned.
SeamCut min_error_cut(const Eigen::MatrixXd& errors, SeamOrientation orientation);

/// Overlap squared-difference of a candidate patch against the placed
/// region of `canvas` with its top-left at (y, x).
double overlap_error(const PatchTensor& canvas, const std::vector<std::uint8_t>& filled,
                     const PatchTensor& patch, int y, int x, int overlap);

/// Raster-order image quilting over a fixed candidate pool.
Image quilt(std::span<const PatchTensor> patches, const QuiltConfig& config);

int default_overlap(int patch_size);

}  // namespace hoptex
