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
#include <vector>

namespace hoptex {

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
  double tolerance = 1e-8;  // relative inertia change that ends an iteration
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Eigen::MatrixXd centroids;  // k x d
  std::vector<int> labels;    // one per data row
  double inertia = 0.0;
  int iterations = 0;
  int reseeded = 0;           // empty clusters refilled from the farthest point
};

/// Lloyd's algorithm with k-means++ seeding on the rows of `data`. Keeps the
/// restart with the lowest inertia. Every returned cluster is non-empty.
KMeansResult kmeans(const Eigen::MatrixXd& data, int k, const KMeansOptions& options);

/// Index of the nearest centroid for each row.
std::vector<int> assign_nearest(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids,
                                Eigen::VectorXd* distances = nullptr);

}  // namespace hoptex
