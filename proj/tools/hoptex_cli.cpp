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

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "hoptex/error.hpp"
#include "hoptex/image_io.hpp"
#include "hoptex/pipeline.hpp"
#include "hoptex/quilting.hpp"
#include "hoptex/serialize.hpp"
#include "hoptex/size_audit.hpp"
#include "hoptex/timing.hpp"

namespace fs = std::filesystem;
using namespace hoptex;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t drawn = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cout << "seed: " << drawn << " (drawn from entropy; pass --seed to reproduce)\n";
  return drawn;
}

void require_file(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IoError("no such file: " + path.string());
}

std::pair<int, int> parse_size(const std::string& text) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t a = 0, b = 0;
    const int w = std::stoi(text.substr(0, x), &a);
    const int h = std::stoi(text.substr(x + 1), &b);
    if (a != x || b != text.size() - x - 1 || w <= 0 || h <= 0) throw std::invalid_argument(text);
    return {w, h};
  } catch (const std::exception&) {
    throw ArgumentError("bad image size '" + text + "' (expected WxH)");
  }
}

std::string percent(double part, double whole) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << 100.0 * part / whole << "%";
  return out.str();
}

struct AnalyzeArgs {
  std::string exemplar;
  std::string output;
  int patch = 32;
  int stride = 2;
  std::size_t random = 0;
  std::string k1 = "knee";
  std::string k2 = "knee";
  double gamma = 0.01;
  int clusters = 50;
  int codebook = 200;
  double whitening_energy = 0.99;
  std::optional<double> rejection;
  std::optional<std::uint64_t> seed;
  bool timing = false;
};

int run_analyze(const AnalyzeArgs& a) {
  TrainConfig cfg;
  cfg.patch_size = a.patch;
  if (a.random > 0)
    cfg.crop = RandomCrop{a.random, 0};
  else
    cfg.crop = StridedCrop{a.stride};
  const ChainConfig defaults = ChainConfig::defaults();
  cfg.chain.hops[0].rule = parse_channel_rule(a.k1, std::get<EnergyKnee>(defaults.hops[0].rule));
  cfg.chain.hops[1].rule = parse_channel_rule(a.k2, std::get<EnergyKnee>(defaults.hops[1].rule));
  cfg.gamma = a.gamma;
  cfg.core.clusters = a.clusters;
  cfg.core.codebook_size = a.codebook;
  cfg.core.whitening_energy = a.whitening_energy;
  if (a.rejection) cfg.core.rejection_threshold = *a.rejection;
  cfg.validate();

  require_file(a.exemplar);
  const Image exemplar = load_image(a.exemplar);
  if (exemplar.channels != 3) throw ArgumentError(a.exemplar + ": expected an RGB image");
  cfg.seed = resolve_seed(a.seed);

  std::cout << "exemplar " << a.exemplar << ": " << exemplar.width << "x" << exemplar.height << "\n";
  std::cout << "hop rules: " << describe(cfg.chain.hops[0].rule) << "; " << describe(cfg.chain.hops[1].rule)
            << "\n";
  const TextureModel model = train(exemplar, cfg);
  save_model(model, a.output);

  const auto& shapes = model.chain.shapes;
  std::cout << "training patches: " << model.provenance.training_patches << "\n";
  std::cout << "shape chain:";
  for (std::size_t i = 0; i < shapes.size(); ++i)
    std::cout << (i ? " -> " : " ") << shapes[i].height << "x" << shapes[i].width << "x" << shapes[i].channels
              << " (" << shapes[i].dim() << ")";
  std::cout << "\n";
  for (std::size_t i = 1; i < shapes.size(); ++i)
    std::cout << "hop " << i << ": kept " << shapes[i].channels << " channels, D" << i << "/D0 = "
              << percent(shapes[i].dim(), shapes[0].dim()) << "\n";
  const auto& d = model.declared;
  std::cout << "core: D_r=" << d.reduced_dim << " N=" << d.clusters << " F=" << d.cdfs << " W=" << d.codewords
            << "\n";
  int fallbacks = 0;
  for (const auto& c : model.core.clusters) fallbacks += c.ica_converged ? 0 : 1;
  if (fallbacks > 0)
    std::cout << "warning: FastICA did not converge in " << fallbacks << " cluster(s); used whitening basis\n";
  const SizeReport report = audit_size(model);
  std::cout << "parameters: " << report.closed_form_total() << (report.agrees() ? "" : " (audit mismatch)")
            << "\n";
  if (a.timing) {
    TimingReport t;
    t.analysis = model.analysis_seconds;
    std::cout << t.to_text();
  }
  std::cout << "wrote " << a.output << "\n";
  return kExitOk;
}

struct GenerateArgs {
  std::string model;
  std::optional<std::size_t> patches;
  std::string out_dir = ".";
  std::string image;
  std::size_t pool = 2000;
  int images = 1;
  std::string output = "texture.png";
  int overlap = 0;
  double tolerance = 0.1;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool timing = false;
  bool json = false;
};

fs::path numbered(const fs::path& base, int index, int count) {
  if (count == 1) return base;
  return base.parent_path() / (base.stem().string() + "_" + std::to_string(index + 1) + base.extension().string());
}

int run_generate(const GenerateArgs& a) {
  if (a.patches.has_value() == !a.image.empty())
    throw ArgumentError("generate needs exactly one of --patches or --image");
  const int threads = a.threads > 0 ? a.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::optional<std::pair<int, int>> size;
  if (!a.image.empty()) {
    size = parse_size(a.image);
    if (a.pool == 0) throw ArgumentError("--pool must be positive");
    if (a.images <= 0) throw ArgumentError("--images must be positive");
    if (!(a.tolerance >= 0.0)) throw ArgumentError("--tolerance must be >= 0");
  }
  require_file(a.model);
  const TextureModel model = load_model(a.model);
  const std::uint64_t seed = resolve_seed(a.seed);

  if (a.patches) {
    Stopwatch clock;
    const auto patches = generate_patches(model, *a.patches, seed, threads);
    if (!patches.empty()) fs::create_directories(a.out_dir);
    char name[32];
    for (std::size_t i = 0; i < patches.size(); ++i) {
      std::snprintf(name, sizeof(name), "patch_%05zu.png", i);
      save_image(to_image(patches[i]), fs::path(a.out_dir) / name);
    }
    std::cout << "wrote " << patches.size() << " patches to " << a.out_dir << "\n";
    if (a.timing) {
      TimingReport t;
      t.runs.push_back({clock.seconds(), 0.0});
      std::cout << (a.json ? t.to_key_values() : t.to_text());
    }
    return kExitOk;
  }

  TimingReport t;
  for (int k = 0; k < a.images; ++k) {
    const std::uint64_t image_seed = a.images == 1 ? seed : derive_seed(seed, 100 + k);
    Stopwatch gen_clock;
    const auto pool = generate_patches(model, a.pool, image_seed, threads);
    const double generation = gen_clock.seconds();
    QuiltConfig q;
    q.out_width = size->first;
    q.out_height = size->second;
    q.overlap = a.overlap;
    q.tolerance = a.tolerance;
    q.seed = derive_seed(image_seed, 7);
    Stopwatch quilt_clock;
    const Image img = quilt(pool, q);
    t.runs.push_back({generation, quilt_clock.seconds()});
    const fs::path out = numbered(a.output, k, a.images);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_image(img, out);
    std::cout << "wrote " << out.string() << "\n";
  }
  if (a.timing) {
    std::cout << "analysis: loaded from " << a.model << " (one-time overhead, not repeated)\n";
    std::cout << (a.json ? t.to_key_values() : t.to_text());
  }
  return kExitOk;
}

int run_stats(const std::string& path, bool json, bool check) {
  require_file(path);
  const TextureModel model = load_model(path);
  const SizeReport report = audit_size(model);
  if (json) {
    std::cout << report.to_json() << "\n";
  } else {
    const auto& shapes = model.chain.shapes;
    std::cout << "shape chain:";
    for (std::size_t i = 0; i < shapes.size(); ++i) std::cout << (i ? " -> " : " ") << shapes[i].dim();
    std::cout << "\n" << report.to_text();
  }
  if (check && !report.agrees()) {
    std::cerr << "check failed: closed-form and walked parameter counts differ\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hoptex: texture synthesis from a single exemplar"};
  app.require_subcommand(1);

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Fit a texture model to an exemplar PNG");
  analyze->add_option("exemplar", aa.exemplar, "Exemplar image (PNG, RGB)")->required();
  analyze->add_option("-o,--output", aa.output, "Model file to write")->required();
  analyze->add_option("--patch", aa.patch, "Patch size in pixels")->capture_default_str();
  auto* stride = analyze->add_option("--stride", aa.stride, "Dense crop stride")->capture_default_str();
  analyze->add_option("--random", aa.random, "Use N random crops instead of dense crops")->excludes(stride);
  analyze->add_option("--k1", aa.k1, "Hop-1 channels: count or knee[:MIN:MAX[:S]]")->capture_default_str();
  analyze->add_option("--k2", aa.k2, "Hop-2 channels: count or knee[:MIN:MAX[:S]]")->capture_default_str();
  analyze->add_option("--gamma", aa.gamma, "Spatial reduction threshold (intensities in [0,1])")
      ->capture_default_str();
  analyze->add_option("--clusters", aa.clusters, "Number of clusters N")->capture_default_str();
  analyze->add_option("--codebook", aa.codebook, "CDF codebook size W (0 = no quantization)")
      ->capture_default_str();
  analyze->add_option("--whitening-energy", aa.whitening_energy, "Energy kept by per-cluster whitening")
      ->capture_default_str();
  analyze->add_option("--rejection-threshold", aa.rejection, "Rejection threshold (default: from data)");
  analyze->add_option("--seed", aa.seed, "Root seed");
  analyze->add_flag("--report-timing", aa.timing, "Print the analysis time");

  GenerateArgs ga;
  auto* generate = app.add_subcommand("generate", "Generate patches or quilted images from a model");
  generate->add_option("model", ga.model, "Model file")->required();
  generate->add_option("--patches", ga.patches, "Write N patch PNGs");
  generate->add_option("--out-dir", ga.out_dir, "Directory for --patches")->capture_default_str();
  generate->add_option("--image", ga.image, "Quilt an image of size WxH");
  generate->add_option("--pool", ga.pool, "Patches generated per image")->capture_default_str();
  generate->add_option("--images", ga.images, "Number of images from the same model")->capture_default_str();
  generate->add_option("-o,--output", ga.output, "Output PNG for --image")->capture_default_str();
  generate->add_option("--overlap", ga.overlap, "Quilting overlap (0 = patch/6)")->capture_default_str();
  generate->add_option("--tolerance", ga.tolerance, "Candidate tolerance")->capture_default_str();
  generate->add_option("--seed", ga.seed, "Root seed");
  generate->add_option("--threads", ga.threads, "Worker threads (0 = logical cores)")->capture_default_str();
  generate->add_flag("--report-timing", ga.timing, "Print the phase timing breakdown");
  generate->add_flag("--json", ga.json, "Timing as key=value lines");

  std::string stats_model;
  bool stats_json = false, stats_check = false;
  auto* stats = app.add_subcommand("stats", "Print the model-size report");
  stats->add_option("model", stats_model, "Model file")->required();
  stats->add_flag("--json", stats_json, "Machine-readable output");
  stats->add_flag("--check", stats_check, "Exit 1 if the closed form and the walked count disagree");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*analyze) return run_analyze(aa);
    if (*generate) return run_generate(ga);
    return run_stats(stats_model, stats_json, stats_check);
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
