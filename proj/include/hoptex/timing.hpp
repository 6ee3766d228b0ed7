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

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace hoptex {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Wall-clock breakdown of analysis (once per model) and, per produced
/// image, generation and quilting.
struct TimingReport {
  struct Run {
    double generation = 0.0;
    double quilting = 0.0;
  };
  std::optional<double> analysis;
  std::vector<Run> runs;

  double total() const;
  /// Human-readable lines; analysis is marked as a one-time overhead.
  std::string to_text() const;
  /// key=value lines.
  std::string to_key_values() const;
};

}  // namespace hoptex
