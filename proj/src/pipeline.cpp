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

#include "hoptex/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "hoptex/error.hpp"
#include "hoptex/random.hpp"
#include "hoptex/timing.hpp"

namespace hoptex {

void TrainConfig::validate() const {
  if (patch_size <= 0) throw ArgumentError("patch size must be positive");
  if (const auto* s = std::get_if<StridedCrop>(&crop); s && s->stride <= 0)
    throw ArgumentError("crop stride must be positive");
  if (const auto* r = std::get_if<RandomCrop>(&crop); r && r->count < 2)
    throw ArgumentError("random cropping needs at least two patches");
  if (chain.hops.empty()) throw ArgumentError("at least one hop is required");
  int extent = patch_size;
  for (std::size_t i = 0; i < chain.hops.size(); ++i) {
    const auto& hop = chain.hops[i];
    if (hop.window <= 0 || extent % hop.window != 0)
      throw ArgumentError("hop " + std::to_string(i + 1) + " window " + std::to_string(hop.window) +
                          " does not divide " + std::to_string(extent));
    extent /= hop.window;
    if (const auto* knee = std::get_if<EnergyKnee>(&hop.rule)) {
      if (!(knee->sensitivity >= 0.0)) throw ArgumentError("knee sensitivity must be >= 0");
      if (knee->min_count > knee->max_count) throw ArgumentError("knee bounds are inverted");
    } else if (std::get<FixedCount>(hop.rule).count <= 0) {
      throw ArgumentError("fixed channel count must be positive");
    }
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ArgumentError("gamma must be a finite value >= 0");
  if (core.clusters <= 0) throw ArgumentError("cluster count must be positive");
  if (core.codebook_size < 0) throw ArgumentError("codebook size must be >= 0");
  if (!(core.whitening_energy > 0.0 && core.whitening_energy <= 1.0))
    throw ArgumentError("whitening energy must lie in (0, 1]");
  if (!(core.rejection_percentile >= 0.0 && core.rejection_percentile <= 1.0))
    throw ArgumentError("rejection percentile must lie in [0, 1]");
  if (core.kmeans.restarts <= 0 || core.kmeans.max_iterations <= 0)
    throw ArgumentError("k-means restarts and iterations must be positive");
  if (core.ica.max_iterations <= 0 || !(core.ica.tolerance > 0.0))
    throw ArgumentError("FastICA iterations and tolerance must be positive");
}

ModelDims ModelDims::of(const HopChain& chain, const CoreModel& core) {
  ModelDims d;
  d.input_channels = chain.shapes.front().channels;
  for (const auto& hop : chain.hops) {
    d.windows.push_back(hop.window());
    d.hop_channels.push_back(hop.out_channels());
  }
  d.core_map = core.sdr.map_size();
  d.reduced_dim = core.reduced_dim();
  d.clusters = static_cast<int>(core.clusters.size());
  d.cdfs = core.cdf_count();
  d.codewords = core.codebook.size();
  return d;
}

TextureModel train(const Image& exemplar, const TrainConfig& config) {
  config.validate();
  exemplar.validate();
  if (exemplar.height < config.patch_size || exemplar.width < config.patch_size)
    throw ArgumentError("exemplar " + std::to_string(exemplar.height) + "x" +
                        std::to_string(exemplar.width) + " is smaller than patch size " +
                        std::to_string(config.patch_size));
  Stopwatch clock;
  TextureModel model;
  model.config = config;
  if (auto* r = std::get_if<RandomCrop>(&model.config.crop)) r->seed = derive_seed(config.seed, 11);
  model.config.core.seed = derive_seed(config.seed, 12);

  std::vector<PatchTensor> core_samples;
  {
    const std::vector<PatchTensor> patches =
        extract_patches(exemplar, config.patch_size, model.config.crop);
    model.provenance.training_patches = patches.size();
    model.chain = fit_chain(patches, config.chain, &core_samples);
  }
  auto [sdr, reduced] = fit_sdr(core_samples, config.gamma * kIntensityScale * kIntensityScale);
  core_samples.clear();
  core_samples.shrink_to_fit();
  model.core = fit_core(std::move(sdr), reduced, model.config.core);

  model.provenance.exemplar_hash = image_hash(exemplar);
  model.provenance.exemplar_height = exemplar.height;
  model.provenance.exemplar_width = exemplar.width;
  model.declared = ModelDims::of(model.chain, model.core);
  model.analysis_seconds = clock.seconds();
  return model;
}

PatchTensor reconstruct(const HopChain& chain, const PatchTensor& x) {
  return inverse_chain(chain, forward_chain(chain, x));
}

namespace {

PatchTensor generate_one(const TextureModel& model, std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, index));
  const ReducedSample s = sample_reduced(model.core, rng);
  PatchTensor patch = inverse_chain(model.chain, inverse_sdr(model.core.sdr, s.z));
  for (double& v : patch.data) v = std::round(std::clamp(v, 0.0, 255.0));
  return patch;
}

}  // namespace

std::vector<PatchTensor> generate_patches(const TextureModel& model, std::size_t count,
                                          std::uint64_t seed, int threads) {
  std::vector<PatchTensor> out(count);
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = generate_one(model, seed, i);
    return out;
  }
  std::vector<std::exception_ptr> failures(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) out[i] = generate_one(model, seed, i);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

}  // namespace hoptex
