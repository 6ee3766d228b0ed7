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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "hoptex/error.hpp"
#include "hoptex/image_io.hpp"
#include "support.hpp"

using namespace hoptex;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hoptex-io-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::permissions(path, fs::perms::owner_all, fs::perm_options::add, ec);
    fs::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("PNG round trip") {
  TempDir dir;
  SUBCASE("RGB") {
    const Image img = test::synthetic_bricks(40, 56, 1);
    save_image(img, dir.path / "a.png");
    CHECK(load_image(dir.path / "a.png") == img);
  }
  SUBCASE("1x1 grayscale") {
    Image img(1, 1, 1);
    img.data[0] = 173;
    save_image(img, dir.path / "g.png");
    const Image back = load_image(dir.path / "g.png");
    CHECK(back.channels == 1);
    CHECK(back == img);
  }
}

TEST_CASE("load_image errors") {
  TempDir dir;
  CHECK_THROWS_AS(load_image(dir.path / "missing.png"), IoError);
  try {
    load_image(dir.path / "missing.png");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("missing.png") != std::string::npos);
  }

  {
    std::ofstream(dir.path / "text.png") << "definitely not a png";
  }
  CHECK_THROWS_AS(load_image(dir.path / "text.png"), FormatError);

  const Image img = test::synthetic_bricks(32, 32, 2);
  save_image(img, dir.path / "full.png");
  const auto size = fs::file_size(dir.path / "full.png");
  fs::copy_file(dir.path / "full.png", dir.path / "cut.png");
  fs::resize_file(dir.path / "cut.png", size / 2);
  CHECK_THROWS_AS(load_image(dir.path / "cut.png"), FormatError);
}

TEST_CASE("save_image to an unwritable location") {
  TempDir dir;
  const Image img(4, 4, 3);
  CHECK_THROWS_AS(save_image(img, dir.path / "no-such-dir" / "x.png"), IoError);
  if (::geteuid() != 0) {
    fs::permissions(dir.path, fs::perms::owner_write, fs::perm_options::remove);
    CHECK_THROWS_AS(save_image(img, dir.path / "x.png"), IoError);
  }
}

TEST_CASE("strided extraction count") {
  const Image img = test::synthetic_bricks(256, 256, 3);
  CHECK(strided_patch_count(256, 256, 32, 2) == 12769);
  const auto patches = extract_patches(img, 32, StridedCrop{2});
  CHECK(patches.size() == 12769);
  CHECK(patches.front().height == 32);
  CHECK(patches.front().channels == 3);
  CHECK(patches[1].at(0, 0, 0) == img.at(0, 2, 0));
  CHECK(patches.back().at(31, 31, 2) == img.at(255, 255, 2));

  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> dim(1, 40), step(1, 7);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = dim(gen), w = dim(gen), p = std::uniform_int_distribution<int>(1, std::min(h, w))(gen);
    const int s = step(gen);
    std::size_t brute = 0;
    for (int y = 0; y + p <= h; y += s)
      for (int x = 0; x + p <= w; x += s) ++brute;
    CHECK(strided_patch_count(h, w, p, s) == brute);
    CHECK(brute == static_cast<std::size_t>(((h - p) / s + 1) * ((w - p) / s + 1)));
  }
}

TEST_CASE("random extraction") {
  const Image img = test::synthetic_bricks(64, 80, 5);
  const auto a = extract_patches(img, 16, RandomCrop{50, 9});
  const auto b = extract_patches(img, 16, RandomCrop{50, 9});
  const auto c = extract_patches(img, 16, RandomCrop{50, 10});
  CHECK(a.size() == 50);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("patch larger than image") {
  const Image img(20, 40, 3);
  CHECK_THROWS_AS(extract_patches(img, 32, StridedCrop{1}), ArgumentError);
  CHECK(strided_patch_count(20, 40, 32, 1) == 0);
}

TEST_CASE("tensor conversion clamps and rounds") {
  PatchTensor t(1, 3, 1);
  t.data = {-4.0, 127.5, 300.0};
  const Image img = to_image(t);
  CHECK(img.data == std::vector<std::uint8_t>{0, 128, 255});
  CHECK(to_tensor(img).data == std::vector<double>{0.0, 128.0, 255.0});
  CHECK(image_hash(img) == image_hash(to_image(t)));
  Image other = img;
  other.data[1] = 127;
  CHECK(image_hash(img) != image_hash(other));
}
