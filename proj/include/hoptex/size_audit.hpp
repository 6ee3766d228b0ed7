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

#include <cstdint>
#include <string>
#include <vector>

#include "hoptex/pipeline.hpp"

namespace hoptex {

struct SizeComponent {
  std::string name;
  std::string equation;
  std::int64_t closed_form = 0;
  std::int64_t walked = 0;
};

/// Parameter counts per module. `closed_form` comes from the declared
/// scalars; `walked` from the shapes of the stored matrices.
struct SizeReport {
  std::vector<SizeComponent> components;

  std::int64_t closed_form_total() const;
  std::int64_t walked_total() const;
  bool agrees() const;

  std::string to_text() const;
  std::string to_json() const;
};

/// Closed-form counts only (walked left at 0).
SizeReport closed_form_size(const ModelDims& dims);

/// Two-hop RGB shorthand: 2x2 windows, 8x8 core maps.
SizeReport closed_form_size(int k1, int k2, int reduced_dim, int clusters, int cdfs, int codewords);

SizeReport audit_size(const TextureModel& model);

}  // namespace hoptex
