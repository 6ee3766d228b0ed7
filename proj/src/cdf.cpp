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

#include "hoptex/cdf.hpp"

#include <algorithm>
#include <cmath>

namespace hoptex {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Eigen::VectorXd inverse_cdf_table(std::span<const double> values) {
  Eigen::VectorXd table = Eigen::VectorXd::Zero(kCdfBins);
  if (values.empty()) return table;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return table;

  std::vector<double> cumulative(kCdfBins + 1, 0.0);
  for (double v : values) {
    const int bin = std::min(kCdfBins - 1, static_cast<int>((v - lo) / (hi - lo) * kCdfBins));
    cumulative[bin + 1] += 1.0;
  }
  const double n = static_cast<double>(values.size());
  for (int b = 1; b <= kCdfBins; ++b) cumulative[b] = cumulative[b - 1] + cumulative[b] / n;
  cumulative[kCdfBins] = 1.0;

  // cumulative[b] is the mass below edge b / kCdfBins.
  int edge = 0;
  for (int k = 0; k < kCdfBins; ++k) {
    const double q = static_cast<double>(k) / (kCdfBins - 1);
    while (edge < kCdfBins - 1 &&
           (cumulative[edge + 1] < q || cumulative[edge + 1] <= cumulative[edge]))
      ++edge;
    const double lo_c = cumulative[edge], hi_c = cumulative[edge + 1];
    const double t = hi_c > lo_c ? std::clamp((q - lo_c) / (hi_c - lo_c), 0.0, 1.0) : 0.0;
    table[k] = (edge + t) / kCdfBins;
  }
  table[0] = 0.0;
  table[kCdfBins - 1] = 1.0;
  for (int k = 1; k < kCdfBins; ++k) table[k] = std::max(table[k], table[k - 1]);
  return table;
}

double lookup_quantile(const Eigen::Ref<const Eigen::VectorXd>& table, double q) {
  const Eigen::Index last = table.size() - 1;
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(last);
  const Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), last - 1);
  const double t = pos - static_cast<double>(i);
  return table[i] + t * (table[i + 1] - table[i]);
}

std::vector<double> match_histogram(std::span<const double> gaussians,
                                    const Eigen::Ref<const Eigen::VectorXd>& table, double min,
                                    double max) {
  std::vector<double> out(gaussians.size());
  std::transform(gaussians.begin(), gaussians.end(), out.begin(), [&](double g) {
    return min + lookup_quantile(table, normal_cdf(g)) * (max - min);
  });
  return out;
}

}  // namespace hoptex
