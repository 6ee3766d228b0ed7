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

#include "hoptex/fastica.hpp"

#include <algorithm>
#include <cmath>

#include "hoptex/random.hpp"

namespace hoptex {

Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w * w.transpose());
  const Eigen::VectorXd inv_sqrt =
      eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * w;
}

IcaResult fastica(const Eigen::MatrixXd& whitened, const IcaOptions& options) {
  const Eigen::Index k = whitened.cols();
  const double n = static_cast<double>(whitened.rows());
  IcaResult result;
  if (k == 0) {
    result.unmixing.resize(0, 0);
    result.converged = true;
    return result;
  }

  Rng rng(options.seed);
  Eigen::MatrixXd w(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) w(i, j) = rng.normal();
  w = symmetric_decorrelation(w);

  const Eigen::MatrixXd xt = whitened.transpose();  // k x n
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd wx = w * xt;  // k x n
    const Eigen::MatrixXd g = wx.array().tanh().matrix();
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).rowwise().mean();
    Eigen::MatrixXd next = (g * whitened) / n - g_prime_mean.asDiagonal() * w;
    next = symmetric_decorrelation(next);

    const double change =
        ((next * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = std::move(next);
    result.iterations = it + 1;
    if (change < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.unmixing = std::move(w);
  return result;
}

}  // namespace hoptex
