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

namespace hoptex {

struct IcaOptions {
  double tolerance = 1e-4;
  int max_iterations = 200;
  std::uint64_t seed = 0;
};

struct IcaResult {
  Eigen::MatrixXd unmixing;  // k x k, orthogonal; sources = unmixing * whitened
  bool converged = false;
  int iterations = 0;
};

/// Symmetric FastICA with the logcosh contrast on already whitened data
/// (rows are observations, columns the k whitened coordinates).
IcaResult fastica(const Eigen::MatrixXd& whitened, const IcaOptions& options);

/// (W W^T)^{-1/2} W
Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& w);

}  // namespace hoptex
