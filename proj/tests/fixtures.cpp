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

// Writes test inputs for the CLI smoke test:
//   hoptex_fixtures bricks OUT.png SIZE
//   hoptex_fixtures tamper IN.htx OUT.htx   (declared D_r + 1, structure intact)

#include <cstdlib>
#include <iostream>
#include <string>

#include "hoptex/image_io.hpp"
#include "hoptex/serialize.hpp"
#include "support.hpp"

int main(int argc, char** argv) {
  const std::string cmd = argc > 1 ? argv[1] : "";
  if (cmd == "bricks" && argc == 4) {
    const int size = std::atoi(argv[3]);
    hoptex::save_image(hoptex::test::synthetic_bricks(size, size, 1), argv[2]);
    return 0;
  }
  if (cmd == "tamper" && argc == 4) {
    hoptex::TextureModel m = hoptex::load_model(argv[2]);
    m.declared.reduced_dim += 1;
    hoptex::save_model(m, argv[3]);
    return 0;
  }
  std::cerr << "usage: hoptex_fixtures bricks OUT.png SIZE | tamper IN OUT\n";
  return 2;
}
