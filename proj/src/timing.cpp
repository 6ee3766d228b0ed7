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

#include "hoptex/timing.hpp"

#include <iomanip>
#include <sstream>

namespace hoptex {

double TimingReport::total() const {
  double t = analysis.value_or(0.0);
  for (const auto& r : runs) t += r.generation + r.quilting;
  return t;
}

std::string TimingReport::to_text() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  if (analysis) out << "analysis (forward path):    " << *analysis << " s  [one-time overhead]\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out << "image " << i + 1 << " generation (reverse path): " << runs[i].generation << " s\n";
    out << "image " << i + 1 << " quilting:                  " << runs[i].quilting << " s\n";
  }
  out << "total:                      " << total() << " s\n";
  return out.str();
}

std::string TimingReport::to_key_values() const {
  std::ostringstream out;
  out << std::setprecision(9);
  if (analysis) out << "analysis_seconds=" << *analysis << "\nanalysis_one_time=1\n";
  out << "images=" << runs.size() << "\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out << "image" << i + 1 << "_generation_seconds=" << runs[i].generation << "\n";
    out << "image" << i + 1 << "_quilting_seconds=" << runs[i].quilting << "\n";
  }
  out << "total_seconds=" << total() << "\n";
  return out.str();
}

}  // namespace hoptex
