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

#include "hoptex/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "hoptex/error.hpp"
#include "hoptex/random.hpp"

namespace hoptex {

namespace {

// Squared distances, n x k, through one GEMM.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& data, const Eigen::VectorXd& data_norms,
                                  const Eigen::MatrixXd& centroids) {
  Eigen::MatrixXd dist = -2.0 * data * centroids.transpose();
  dist.colwise() += data_norms;
  dist.rowwise() += centroids.rowwise().squaredNorm().transpose();
  return dist.cwiseMax(0.0);
}

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& data, int k, Rng& rng) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd centroids(k, data.cols());
  centroids.row(0) = data.row(static_cast<Eigen::Index>(rng.below(n)));
  Eigen::VectorXd closest = (data.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= closest[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(n));
    }
    centroids.row(c) = data.row(pick);
    closest = closest.cwiseMin((data.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

// Farthest point (by `dist`) whose cluster would stay non-empty without it.
Eigen::Index farthest_movable(const Eigen::VectorXd& dist, const std::vector<int>& labels,
                              const std::vector<Eigen::Index>& counts) {
  Eigen::Index pick = -1;
  for (Eigen::Index i = 0; i < dist.size(); ++i)
    if (counts[labels[i]] > 1 && (pick < 0 || dist[i] > dist[pick])) pick = i;
  return pick;
}

KMeansResult lloyd(const Eigen::MatrixXd& data, const Eigen::VectorXd& norms, int k,
                   const KMeansOptions& options, Rng& rng) {
  const Eigen::Index n = data.rows();
  KMeansResult r;
  r.centroids = seed_plus_plus(data, k, rng);
  r.labels.assign(n, 0);
  double previous = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best(n);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd dist = squared_distances(data, norms, r.centroids);
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index j;
      best[i] = dist.row(i).minCoeff(&j);
      r.labels[i] = static_cast<int>(j);
      inertia += best[i];
    }

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(r.labels[i]) += data.row(i);
      ++counts[r.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      const Eigen::Index far = farthest_movable(best, r.labels, counts);
      --counts[r.labels[far]];
      sums.row(r.labels[far]) -= data.row(far);
      r.labels[far] = c;
      counts[c] = 1;
      sums.row(c) = data.row(far);
      best[far] = 0.0;
      ++r.reseeded;
    }
    for (int c = 0; c < k; ++c) r.centroids.row(c) = sums.row(c) / double(counts[c]);

    r.inertia = inertia;
    r.iterations = it + 1;
    if (previous - inertia <= options.tolerance * std::max(inertia, 1e-300)) break;
    previous = inertia;
  }
  // Final labels and inertia against the final centroids.
  Eigen::VectorXd d;
  r.labels = assign_nearest(data, r.centroids, &d);
  r.inertia = d.sum();
  std::vector<Eigen::Index> counts(k, 0);
  for (int l : r.labels) ++counts[l];
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    const Eigen::Index far = farthest_movable(d, r.labels, counts);
    --counts[r.labels[far]];
    ++counts[c];
    r.inertia -= d[far];
    d[far] = 0.0;
    r.labels[far] = c;
    r.centroids.row(c) = data.row(far);
    ++r.reseeded;
  }
  return r;
}

}  // namespace

std::vector<int> assign_nearest(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids,
                                Eigen::VectorXd* distances) {
  const Eigen::VectorXd norms = data.rowwise().squaredNorm();
  const Eigen::MatrixXd dist = squared_distances(data, norms, centroids);
  std::vector<int> labels(data.rows());
  if (distances) distances->resize(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    Eigen::Index j;
    const double v = dist.row(i).minCoeff(&j);
    labels[i] = static_cast<int>(j);
    if (distances) (*distances)[i] = v;
  }
  return labels;
}

KMeansResult kmeans(const Eigen::MatrixXd& data, int k, const KMeansOptions& options) {
  if (k <= 0) throw ArgumentError("kmeans: k must be positive");
  if (data.rows() < k)
    throw ArgumentError("kmeans: " + std::to_string(k) + " clusters requested for " +
                        std::to_string(data.rows()) + " points");
  const Eigen::VectorXd norms = data.rowwise().squaredNorm();
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  const int restarts = std::max(1, options.restarts);
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(r)));
    KMeansResult candidate = lloyd(data, norms, k, options, rng);
    if (candidate.inertia < best.inertia) best = std::move(candidate);
  }
  return best;
}

}  // namespace hoptex
