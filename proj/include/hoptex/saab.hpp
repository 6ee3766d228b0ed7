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
#include <string>
#include <variant>
#include <vector>

#include "hoptex/tensor.hpp"

namespace hoptex {

/// Keep exactly `count` (clamped to what is available).
struct FixedCount {
  int count = 0;
};

/// Keep every eigenvalue whose ratio to the leading one is at least
/// `sensitivity`; the resulting count is clamped to [min_count, max_count].
struct EnergyKnee {
  double sensitivity = 1e-2;
  int min_count = 0;
  int max_count = 1 << 20;
};

using ChannelRule = std::variant<FixedCount, EnergyKnee>;

/// Number of leading entries of a descending eigenvalue list to keep.
int select_channels(std::span<const double> eigenvalues, const ChannelRule& rule);

/// Parses "N" (fixed count) or "knee[:MIN:MAX[:SENSITIVITY]]". Fields left
/// out are taken from `fallback`.
ChannelRule parse_channel_rule(const std::string& text, const EnergyKnee& fallback = {});

std::string describe(const ChannelRule& rule);

/// One Saab filter bank over non-overlapping window x window x in_channels
/// blocks. Block vectors are flattened as (dy * window + dx) * in_channels + c.
///
/// The DC filter is implicit (all ones / sqrt(d)). `ac_filters` holds the
/// retained AC rows only, in descending eigenvalue order; `eigenvalues`
/// keeps the full AC spectrum of the fit.
struct SaabStage {
  int window = 2;
  int in_channels = 1;
  Eigen::MatrixXd ac_filters;   // kept_ac x d
  Eigen::VectorXd eigenvalues;  // d - 1, descending
  double bias = 0.0;
  bool degenerate = false;      // every AC eigenvalue vanished during fit

  int block_dim() const { return window * window * in_channels; }
  int kept_ac() const { return static_cast<int>(ac_filters.rows()); }
  int out_channels() const { return 1 + kept_ac(); }

  /// Stacked [DC; kept AC] analysis matrix, (1 + kept_ac) x d.
  Eigen::MatrixXd kernel() const;

  /// Responses of each block row, bias included: (n x d) -> (n x out_channels).
  Eigen::MatrixXd respond(const Eigen::MatrixXd& blocks) const;
  /// Least-squares block reconstruction from biased responses.
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& responses) const;
};

/// Rows are the flattened non-overlapping blocks of every sample, in sample
/// then raster order. `channel` < 0 takes all channels jointly, otherwise only
/// that channel (one block row per window, d = window^2).
Eigen::MatrixXd collect_blocks(std::span<const PatchTensor> samples, int window,
                               int channel = -1);

/// Full-spectrum fit: every AC component is retained and the bias is sized
/// for all of them.
SaabStage fit_saab_blocks(const Eigen::MatrixXd& blocks, int window, int in_channels);

/// Drops AC rows past `kept_ac` and resizes the bias for the retained
/// responses of `blocks`.
void retain_ac(SaabStage& stage, int kept_ac, const Eigen::MatrixXd& blocks);

/// Fits a Saab stage on all channels jointly and keeps the AC components
/// chosen by `keep` applied to the AC eigenvalues.
SaabStage fit_saab(std::span<const PatchTensor> samples, int window, const ChannelRule& keep);

PatchTensor forward_stage(const SaabStage& stage, const PatchTensor& x);
PatchTensor inverse_stage(const SaabStage& stage, const PatchTensor& y);

/// One hop of the chain. Hop 0 is a single joint stage; later hops hold one
/// channel-wise stage per parent channel and emit their outputs group by
/// group (DC then kept AC of parent 0, then parent 1, ...).
struct Hop {
  bool channelwise = false;
  std::vector<SaabStage> stages;

  int window() const { return stages.empty() ? 0 : stages.front().window; }
  int in_channels() const;
  int out_channels() const;
  std::vector<int> group_sizes() const;
};

struct HopShape {
  int height = 0;
  int width = 0;
  int channels = 0;
  int dim() const { return height * width * channels; }
  bool operator==(const HopShape&) const = default;
};

struct HopConfig {
  int window = 2;
  /// Applies to the total channel count this hop emits (K_{i+1}); every
  /// channel-wise group keeps its DC channel.
  ChannelRule rule = EnergyKnee{};
};

struct ChainConfig {
  std::vector<HopConfig> hops;

  /// Two hops, 2x2 windows, knee selection bounded to [6,10] and [20,30].
  static ChainConfig defaults();
};

struct HopChain {
  std::vector<Hop> hops;
  /// shapes[0] is the input shape; shapes[i + 1] follows hop i.
  std::vector<HopShape> shapes;

  HopShape core_shape() const { return shapes.back(); }
};

/// Total channels (groups + kept AC) for a hop given its pooled AC spectrum.
int select_total_channels(std::span<const double> sorted_ac, int groups, const ChannelRule& rule);

/// Fits hop by hop on the outputs of the previous hop. When `core_out` is
/// given it receives the forward responses of every sample at the last hop.
HopChain fit_chain(std::span<const PatchTensor> samples, const ChainConfig& config,
                   std::vector<PatchTensor>* core_out = nullptr);

PatchTensor forward_hop(const Hop& hop, const PatchTensor& x);
PatchTensor inverse_hop(const Hop& hop, const PatchTensor& y);

PatchTensor forward_chain(const HopChain& chain, const PatchTensor& x);
PatchTensor inverse_chain(const HopChain& chain, const PatchTensor& z);

}  // namespace hoptex
