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

#include <span>
#include <vector>

namespace hoptex {

inline constexpr int kCdfBins = 256;

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse-CDF table of `values` on the normalized [0, 1] domain spanning
/// [min, max] of the values. Entry k is the normalized value at quantile
/// k / (kCdfBins - 1), found by inverting the 256-bin cumulative histogram
/// with linear interpolation. Non-decreasing, starts at 0 and ends at 1
/// (constant inputs give an all-zero table).
Eigen::VectorXd inverse_cdf_table(std::span<const double> values);

/// Linear interpolation of an inverse-CDF table at quantile q in [0, 1].
double lookup_quantile(const Eigen::Ref<const Eigen::VectorXd>& table, double q);

/// Elementwise Phi(g), looked up in `table` and rescaled to [min, max].
std::vector<double> match_histogram(std::span<const double> gaussians,
                                    const Eigen::Ref<const Eigen::VectorXd>& table, double min,
                                    double max);

}  // namespace hoptex
