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
#include <limits>
#include <span>
#include <vector>

#include "hoptex/kmeans.hpp"
#include "hoptex/fastica.hpp"
#include "hoptex/random.hpp"
#include "hoptex/tensor.hpp"

namespace hoptex {

/// Per-channel PCA over the spatial map of each core channel.
struct SdrModel {
  int height = 0;
  int width = 0;
  struct Channel {
    Eigen::VectorXd mean;       // height * width
    Eigen::MatrixXd basis;      // (height * width) x kept, orthonormal columns
    Eigen::VectorXd variances;  // full descending spectrum of the fit
  };
  std::vector<Channel> channels;

  int map_size() const { return height * width; }
  int reduced_dim() const;
  std::vector<int> kept_per_channel() const;
};

/// Fits SDR on core tensors. Keeps, per channel, every PCA component whose
/// training variance is at least `gamma`. Returns the model and the reduced
/// vectors (one row per sample, channel blocks concatenated in order).
std::pair<SdrModel, Eigen::MatrixXd> fit_sdr(std::span<const PatchTensor> core_samples, double gamma);

Eigen::VectorXd forward_sdr(const SdrModel& sdr, const PatchTensor& x);
PatchTensor inverse_sdr(const SdrModel& sdr, const Eigen::Ref<const Eigen::VectorXd>& z);

struct CdfRef {
  int codeword = 0;
  double min = 0.0;
  double max = 0.0;
};

struct Cluster {
  double probability = 0.0;
  Eigen::VectorXd mean;       // D_r
  Eigen::MatrixXd whitening;  // K_c x D_r
  Eigen::MatrixXd unmixing;   // K_c x K_c
  Eigen::MatrixXd mixing;     // K_c x K_c, inverse of unmixing
  std::vector<CdfRef> cdfs;   // one per ICA component
  std::size_t members = 0;
  bool ica_converged = true;  // false -> unmixing fell back to identity

  /// Pseudo-inverse of `whitening`, D_r x K_c. Derived; not serialized.
  Eigen::MatrixXd dewhitening;

  int components() const { return static_cast<int>(whitening.rows()); }
  void refresh_derived();
};

/// W inverse-CDF tables of kCdfBins entries each, on the normalized domain.
struct CdfCodebook {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> codewords;  // W x kCdfBins

  int size() const { return static_cast<int>(codewords.rows()); }
};

struct CoreConfig {
  int clusters = 50;
  /// Codebook size W; 0 keeps every CDF exactly (W = F). Values above F are
  /// clamped to F.
  int codebook_size = 200;
  double whitening_energy = 0.99;
  KMeansOptions kmeans{};
  IcaOptions ica{};
  /// Percentile of the per-sample maximum training source value used as the
  /// rejection threshold. Ignored when `rejection_threshold` is set.
  double rejection_percentile = 0.10;
  /// Explicit threshold; NaN selects the percentile rule, -inf disables
  /// rejection.
  double rejection_threshold = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
};

struct CoreModel {
  SdrModel sdr;
  std::vector<Cluster> clusters;
  CdfCodebook codebook;
  std::vector<double> interval;  // N + 1 cumulative boundaries, 0 ... 1
  double rejection_threshold = -std::numeric_limits<double>::infinity();
  int core_height = 0;
  int core_width = 0;
  int core_channels = 0;

  int reduced_dim() const { return sdr.reduced_dim(); }
  int cdf_count() const;
  void refresh_derived();
};

/// Cluster, whiten, unmix and quantize the CDFs of reduced core vectors
/// (rows of `reduced`). `sdr` is carried into the model unchanged.
CoreModel fit_core(SdrModel sdr, const Eigen::MatrixXd& reduced, const CoreConfig& config);

/// Cluster index owning the uniform draw u in [0, 1).
int locate_cluster(std::span<const double> interval, double u);

/// Dequantized inverse-CDF table of one cluster component.
Eigen::VectorXd cdf_table(const CoreModel& model, const CdfRef& ref);

struct ReducedSample {
  Eigen::VectorXd z;        // D_r
  std::vector<double> sources;  // matched ICA component values
  int cluster = 0;
  int attempts = 0;
};

/// Draws one reduced core vector with the mixture/histogram-matching model.
ReducedSample sample_reduced(const CoreModel& model, Rng& rng);

/// Full core sample: sample_reduced followed by inverse SDR.
PatchTensor sample_core(const CoreModel& model, std::uint64_t seed);

inline constexpr int kMaxRejections = 100;

}  // namespace hoptex
