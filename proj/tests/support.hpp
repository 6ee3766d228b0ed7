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

// Test-only oracles and fixtures. Nothing here calls into the library's
// numerical routines, so these stay independent of the code they check.

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "hoptex/tensor.hpp"

namespace hoptex::test {

/// Cyclic Jacobi eigensolver for a symmetric matrix. Returns eigenvalues in
/// descending order with matching unit eigenvectors as columns.
inline void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
  values.resize(n);
  vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    values[i] = a(order[i], order[i]);
    vectors.col(i) = v.col(order[i]);
  }
}

/// Exhaustive minimum over monotone top-to-bottom paths of `e` (one column
/// per row, neighbours differ by at most one). Enumerates in lexicographic
/// order and keeps the first strict improvement.
inline std::pair<std::vector<int>, double> brute_force_cut(const Eigen::MatrixXd& e) {
  const int rows = static_cast<int>(e.rows()), cols = static_cast<int>(e.cols());
  std::vector<int> path(rows), best;
  double best_cost = std::numeric_limits<double>::infinity();
  std::function<void(int, double)> walk = [&](int r, double cost) {
    if (r == rows) {
      if (cost < best_cost) {
        best_cost = cost;
        best = path;
      }
      return;
    }
    const int lo = r == 0 ? 0 : std::max(0, path[r - 1] - 1);
    const int hi = r == 0 ? cols - 1 : std::min(cols - 1, path[r - 1] + 1);
    for (int c = lo; c <= hi; ++c) {
      path[r] = c;
      walk(r + 1, cost + e(r, c));
    }
  };
  walk(0, 0.0);
  return {best, best_cost};
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

/// One-sample KS statistic against a continuous CDF.
inline double ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

/// Deterministic brick-wall-like RGB texture: staggered bricks, mortar lines,
/// per-brick tint and pixel noise.
inline Image synthetic_bricks(int height, int width, std::uint64_t seed) {
  Image img(height, width, 3);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> tint(-18.0, 18.0);
  std::normal_distribution<double> noise(0.0, 6.0);
  const int brick_h = 16, brick_w = 32;
  std::vector<double> tints((height / brick_h + 2) * (width / brick_w + 2));
  for (double& t : tints) t = tint(gen);
  for (int y = 0; y < height; ++y) {
    const int row = y / brick_h;
    const int shift = (row % 2) * (brick_w / 2);
    for (int x = 0; x < width; ++x) {
      const int col = (x + shift) / brick_w;
      const bool mortar = y % brick_h < 2 || (x + shift) % brick_w < 2;
      const double t = tints[row * (width / brick_w + 2) + col];
      const double base[3] = {mortar ? 190.0 : 150.0 + t, mortar ? 185.0 : 70.0 + 0.5 * t,
                              mortar ? 175.0 : 50.0 + 0.3 * t};
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(base[c] + noise(gen)), 0L, 255L));
    }
  }
  return img;
}

inline PatchTensor random_tensor(int h, int w, int c, std::mt19937_64& gen, double lo = 0.0,
                                 double hi = 255.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  PatchTensor t(h, w, c);
  for (double& v : t.data) v = u(gen);
  return t;
}

inline double relative_error(const PatchTensor& a, const PatchTensor& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    num += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    den += b.data[i] * b.data[i];
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

/// Two well-separated blobs in R^4. Each blob mixes four independent uniform
/// sources (standard deviations 5, 3, 2, 1) through its own rotation. Returns
/// one 2x2x1 tensor per sample so the data can go through fit_sdr.
struct TwoBlobs {
  std::vector<PatchTensor> samples;
  std::vector<int> blob;  // 0 or 1 per sample
  double fraction0 = 0.0;
};

inline TwoBlobs two_blobs(std::size_t n, double fraction0, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-std::sqrt(3.0), std::sqrt(3.0));
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd rot[2];
  for (auto& r : rot) {
    Eigen::MatrixXd m(4, 4);
    for (int i = 0; i < 16; ++i) m.data()[i] = g(gen);
    r = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  }
  const Eigen::Vector4d scale(5, 3, 2, 1);
  const Eigen::Vector4d centre[2] = {Eigen::Vector4d(60, 0, 0, 0), Eigen::Vector4d(-60, 10, 0, 0)};
  TwoBlobs out;
  out.fraction0 = fraction0;
  const std::size_t n0 = static_cast<std::size_t>(std::lround(fraction0 * n));
  for (std::size_t i = 0; i < n; ++i) {
    const int b = i < n0 ? 0 : 1;
    Eigen::Vector4d s;
    for (int j = 0; j < 4; ++j) s[j] = scale[j] * u(gen);
    const Eigen::Vector4d x = centre[b] + rot[b] * s;
    PatchTensor t(2, 2, 1);
    for (int j = 0; j < 4; ++j) t.data[j] = x[j];
    out.samples.push_back(std::move(t));
    out.blob.push_back(b);
  }
  return out;
}

inline double uniform_cdf(double x, double lo, double hi) {
  return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

}  // namespace hoptex::test
