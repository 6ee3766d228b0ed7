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

#include "hoptex/quilting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hoptex/error.hpp"
#include "hoptex/image_io.hpp"
#include "hoptex/random.hpp"

namespace hoptex {

int default_overlap(int patch_size) {
  return std::max(1, static_cast<int>(std::lround(patch_size / 6.0)));
}

SeamCut min_error_cut(const Eigen::MatrixXd& errors, SeamOrientation orientation) {
  // Work on a (steps x positions) view; horizontal seams step over columns.
  const Eigen::MatrixXd e =
      orientation == SeamOrientation::kVertical ? errors : Eigen::MatrixXd(errors.transpose());
  const Eigen::Index steps = e.rows(), positions = e.cols();
  SeamCut cut;
  cut.orientation = orientation;
  if (steps == 0 || positions == 0) return cut;

  // Cost-to-go from each cell down to the last step.
  Eigen::MatrixXd togo(steps, positions);
  togo.row(steps - 1) = e.row(steps - 1);
  for (Eigen::Index r = steps - 2; r >= 0; --r) {
    for (Eigen::Index c = 0; c < positions; ++c) {
      double best = togo(r + 1, c);
      if (c > 0) best = std::min(best, togo(r + 1, c - 1));
      if (c + 1 < positions) best = std::min(best, togo(r + 1, c + 1));
      togo(r, c) = e(r, c) + best;
    }
  }

  cut.path.resize(steps);
  Eigen::Index at = 0;
  for (Eigen::Index c = 1; c < positions; ++c)
    if (togo(0, c) < togo(0, at)) at = c;
  cut.cost = togo(0, at);
  cut.path[0] = static_cast<int>(at);
  for (Eigen::Index r = 1; r < steps; ++r) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, at - 1);
    const Eigen::Index hi = std::min<Eigen::Index>(positions - 1, at + 1);
    Eigen::Index next = lo;
    for (Eigen::Index c = lo + 1; c <= hi; ++c)
      if (togo(r, c) < togo(r, next)) next = c;
    at = next;
    cut.path[r] = static_cast<int>(at);
  }
  return cut;
}

namespace {

double pixel_error(const PatchTensor& canvas, const PatchTensor& patch, int cy, int cx, int py, int px) {
  double sum = 0.0;
  for (int c = 0; c < patch.channels; ++c) {
    const double d = canvas.at(cy, cx, c) - patch.at(py, px, c);
    sum += d * d;
  }
  return sum;
}

}  // namespace

double overlap_error(const PatchTensor& canvas, const std::vector<std::uint8_t>& filled,
                     const PatchTensor& patch, int y, int x, int overlap) {
  const int p = patch.height;
  double total = 0.0;
  // Left band, then the top band without the shared corner.
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < overlap; ++c)
      if (filled[static_cast<std::size_t>(y + r) * canvas.width + x + c])
        total += pixel_error(canvas, patch, y + r, x + c, r, c);
  for (int r = 0; r < overlap; ++r)
    for (int c = overlap; c < p; ++c)
      if (filled[static_cast<std::size_t>(y + r) * canvas.width + x + c])
        total += pixel_error(canvas, patch, y + r, x + c, r, c);
  return total;
}

Image quilt(std::span<const PatchTensor> patches, const QuiltConfig& config) {
  if (patches.empty()) throw ArgumentError("quilt: empty patch list");
  const PatchTensor& first = patches.front();
  const int p = first.height;
  if (first.width != p) throw ArgumentError("quilt: patches must be square");
  for (const auto& patch : patches)
    if (patch.height != p || patch.width != p || patch.channels != first.channels)
      throw ArgumentError("quilt: patches differ in shape");
  if (config.out_height < p || config.out_width < p)
    throw ArgumentError("quilt: output " + std::to_string(config.out_height) + "x" +
                        std::to_string(config.out_width) + " is smaller than patch size " +
                        std::to_string(p));
  if (!(config.tolerance >= 0.0)) throw ArgumentError("quilt: tolerance must be >= 0");
  const int overlap = config.overlap > 0 ? config.overlap : default_overlap(p);
  if (overlap >= p) throw ArgumentError("quilt: overlap must be smaller than the patch size");

  const int step = p - overlap;
  auto tiles = [&](int extent) { return extent <= p ? 1 : (extent - p + step - 1) / step + 1; };
  const int ny = tiles(config.out_height), nx = tiles(config.out_width);
  PatchTensor canvas((ny - 1) * step + p, (nx - 1) * step + p, first.channels);
  std::vector<std::uint8_t> filled(static_cast<std::size_t>(canvas.height) * canvas.width, 0);

  Rng rng(config.seed);
  std::vector<double> errors(patches.size());
  std::vector<std::size_t> eligible;
  for (int ty = 0; ty < ny; ++ty) {
    for (int tx = 0; tx < nx; ++tx) {
      const int y = ty * step, x = tx * step;
      std::size_t pick;
      if (ty == 0 && tx == 0) {
        pick = rng.below(patches.size());
      } else {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < patches.size(); ++i) {
          errors[i] = overlap_error(canvas, filled, patches[i], y, x, overlap);
          best = std::min(best, errors[i]);
        }
        eligible.clear();
        const double limit = (1.0 + config.tolerance) * best;
        for (std::size_t i = 0; i < patches.size(); ++i)
          if (errors[i] <= limit) eligible.push_back(i);
        pick = eligible[rng.below(eligible.size())];
      }
      const PatchTensor& patch = patches[pick];

      std::vector<int> left(p, 0), top(p, 0);
      if (tx > 0) {
        Eigen::MatrixXd surface(p, overlap);
        for (int r = 0; r < p; ++r)
          for (int c = 0; c < overlap; ++c) surface(r, c) = pixel_error(canvas, patch, y + r, x + c, r, c);
        left = min_error_cut(surface, SeamOrientation::kVertical).path;
      }
      if (ty > 0) {
        Eigen::MatrixXd surface(overlap, p);
        for (int r = 0; r < overlap; ++r)
          for (int c = 0; c < p; ++c) surface(r, c) = pixel_error(canvas, patch, y + r, x + c, r, c);
        top = min_error_cut(surface, SeamOrientation::kHorizontal).path;
      }
      for (int r = 0; r < p; ++r) {
        for (int c = 0; c < p; ++c) {
          const std::size_t cell = static_cast<std::size_t>(y + r) * canvas.width + x + c;
          const bool take = !filled[cell] || (c >= left[r] && r >= top[c]);
          if (!take) continue;
          for (int ch = 0; ch < patch.channels; ++ch) canvas.at(y + r, x + c, ch) = patch.at(r, c, ch);
          filled[cell] = 1;
        }
      }
    }
  }

  PatchTensor cropped(config.out_height, config.out_width, canvas.channels);
  for (int r = 0; r < cropped.height; ++r)
    for (int c = 0; c < cropped.width; ++c)
      for (int ch = 0; ch < cropped.channels; ++ch) cropped.at(r, c, ch) = canvas.at(r, c, ch);
  return to_image(cropped);
}

}  // namespace hoptex
