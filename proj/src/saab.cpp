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

#include "hoptex/saab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>

#include "hoptex/error.hpp"

namespace hoptex {

int select_channels(std::span<const double> eigenvalues, const ChannelRule& rule) {
  const int n = static_cast<int>(eigenvalues.size());
  if (const auto* fixed = std::get_if<FixedCount>(&rule))
    return std::clamp(fixed->count, 0, n);
  const auto& knee = std::get<EnergyKnee>(rule);
  int count = 0;
  if (n > 0 && eigenvalues[0] > 0.0) {
    while (count < n && eigenvalues[count] / eigenvalues[0] >= knee.sensitivity) ++count;
  }
  count = std::clamp(count, knee.min_count, std::max(knee.min_count, knee.max_count));
  return std::min(count, n);
}

ChannelRule parse_channel_rule(const std::string& text, const EnergyKnee& fallback) {
  const std::string bad = "bad channel rule '" + text + "' (expected a count or knee[:MIN:MAX[:S]])";
  if (text.rfind("knee", 0) == 0) {
    EnergyKnee knee = fallback;
    std::vector<std::string> parts;
    std::stringstream in(text.substr(4));
    std::string part;
    while (std::getline(in, part, ':'))
      if (!part.empty()) parts.push_back(part);
    if (parts.size() == 1 || parts.size() > 3) throw ArgumentError(bad);
    try {
      if (parts.size() >= 2) {
        knee.min_count = std::stoi(parts[0]);
        knee.max_count = std::stoi(parts[1]);
      }
      if (parts.size() == 3) knee.sensitivity = std::stod(parts[2]);
    } catch (const std::exception&) {
      throw ArgumentError(bad);
    }
    return knee;
  }
  try {
    std::size_t used = 0;
    const int count = std::stoi(text, &used);
    if (used == text.size()) return FixedCount{count};
  } catch (const std::exception&) {
  }
  throw ArgumentError(bad);
}

std::string describe(const ChannelRule& rule) {
  if (const auto* f = std::get_if<FixedCount>(&rule)) return "fixed " + std::to_string(f->count);
  const auto& k = std::get<EnergyKnee>(rule);
  std::ostringstream out;
  out << "knee " << k.sensitivity << " in [" << k.min_count << ", " << k.max_count << "]";
  return out.str();
}

int select_total_channels(std::span<const double> sorted_ac, int groups, const ChannelRule& rule) {
  const int available = static_cast<int>(sorted_ac.size());
  int total;
  if (const auto* fixed = std::get_if<FixedCount>(&rule)) {
    total = fixed->count;
  } else {
    const auto& knee = std::get<EnergyKnee>(rule);
    EnergyKnee unbounded = knee;
    unbounded.min_count = 0;
    unbounded.max_count = available;
    total = groups + select_channels(sorted_ac, unbounded);
    total = std::clamp(total, knee.min_count, std::max(knee.min_count, knee.max_count));
  }
  return std::clamp(total, groups, groups + available);
}

namespace {

void check_block_shape(const PatchTensor& x, int window, int channels, const char* what) {
  if (window <= 0 || x.height % window != 0 || x.width % window != 0)
    throw ArgumentError(std::string(what) + ": spatial size " + std::to_string(x.height) + "x" +
                        std::to_string(x.width) + " is not divisible by window " +
                        std::to_string(window));
  if (channels >= 0 && x.channels != channels)
    throw ArgumentError(std::string(what) + ": expected " + std::to_string(channels) +
                        " channels, got " + std::to_string(x.channels));
}

// Calls fn(by, bx, vec) for each window block; vec is gathered from
// `channel` (or every channel when channel < 0).
template <typename Fn>
void for_each_block(const PatchTensor& x, int window, int channel, Eigen::VectorXd& vec, Fn&& fn) {
  const int c0 = channel < 0 ? 0 : channel;
  const int nc = channel < 0 ? x.channels : 1;
  for (int by = 0; by < x.height / window; ++by) {
    for (int bx = 0; bx < x.width / window; ++bx) {
      int k = 0;
      for (int dy = 0; dy < window; ++dy)
        for (int dx = 0; dx < window; ++dx)
          for (int c = 0; c < nc; ++c)
            vec[k++] = x.at(by * window + dy, bx * window + dx, c0 + c);
      fn(by, bx, vec);
    }
  }
}

// Orthonormal basis of the complement of the DC direction, d x (d - 1).
Eigen::MatrixXd dc_complement(int d) {
  if (d <= 1) return Eigen::MatrixXd(d, 0);
  const Eigen::VectorXd dc = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(double(d)));
  Eigen::VectorXd v = -dc;
  v[0] += 1.0;
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(d, d) - 2.0 * v * v.transpose() / v.squaredNorm();
  return h.rightCols(d - 1);
}

struct Moments {
  explicit Moments(int d) : sum(Eigen::VectorXd::Zero(d)), outer(Eigen::MatrixXd::Zero(d, d)) {}
  Eigen::VectorXd sum;
  Eigen::MatrixXd outer;
  double scale = 0.0;  // max |value| seen, for the degeneracy test
  std::size_t count = 0;

  void add(const Eigen::VectorXd& residual, const Eigen::VectorXd& raw) {
    sum += residual;
    outer.selfadjointView<Eigen::Lower>().rankUpdate(residual);
    scale = std::max(scale, raw.cwiseAbs().maxCoeff());
    ++count;
  }
};

void orient(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index idx;
  v.cwiseAbs().maxCoeff(&idx);
  if (v[idx] < 0) v = -v;
}

SaabStage stage_from_moments(const Moments& m, int window, int in_channels) {
  const int d = window * window * in_channels;
  if (m.count < 2) throw ArgumentError("Saab fit needs at least two blocks");
  const double n = static_cast<double>(m.count);
  Eigen::MatrixXd cov = m.outer.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd mean = m.sum / n;
  cov = cov / n - mean * mean.transpose();

  const Eigen::MatrixXd q = dc_complement(d);
  const Eigen::MatrixXd projected = q.transpose() * cov * q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(projected);

  SaabStage stage;
  stage.window = window;
  stage.in_channels = in_channels;
  stage.eigenvalues.resize(d - 1);
  stage.ac_filters.resize(d - 1, d);
  for (int j = 0; j < d - 1; ++j) {
    const int src = d - 2 - j;  // ascending -> descending
    stage.eigenvalues[j] = std::max(0.0, eig.eigenvalues()[src]);
    Eigen::VectorXd f = q * eig.eigenvectors().col(src);
    f.normalize();
    orient(f);
    stage.ac_filters.row(j) = f.transpose();
  }
  const double floor = 1e-12 * std::max(1.0, m.scale * m.scale);
  stage.degenerate = d == 1 || stage.eigenvalues.maxCoeff() <= floor;
  return stage;
}

template <typename Source>
double required_bias(const SaabStage& stage, Source&& visit_blocks) {
  const Eigen::MatrixXd k = stage.kernel();
  double lowest = 0.0;
  Eigen::VectorXd r(k.rows());
  visit_blocks([&](const Eigen::VectorXd& v) {
    r.noalias() = k * v;
    lowest = std::min(lowest, r.minCoeff());
  });
  constexpr double kMargin = 1e-3;
  return (1.0 + kMargin) * -lowest;
}

Moments moments_of(std::span<const PatchTensor> samples, int window, int channel, int d) {
  Moments m(d);
  Eigen::VectorXd vec(d), residual(d);
  const double inv_sqrt_d = 1.0 / std::sqrt(double(d));
  for (const auto& x : samples) {
    for_each_block(x, window, channel, vec, [&](int, int, const Eigen::VectorXd& v) {
      const double dc = v.sum() * inv_sqrt_d;
      residual = v.array() - dc * inv_sqrt_d;
      m.add(residual, v);
    });
  }
  return m;
}

double bias_over_samples(const SaabStage& stage, std::span<const PatchTensor> samples, int channel) {
  Eigen::VectorXd vec(stage.block_dim());
  return required_bias(stage, [&](auto&& sink) {
    for (const auto& x : samples)
      for_each_block(x, stage.window, channel, vec, [&](int, int, const Eigen::VectorXd& v) { sink(v); });
  });
}

}  // namespace

Eigen::MatrixXd SaabStage::kernel() const {
  const int d = block_dim();
  Eigen::MatrixXd k(out_channels(), d);
  k.row(0).setConstant(1.0 / std::sqrt(double(d)));
  if (kept_ac() > 0) k.bottomRows(kept_ac()) = ac_filters;
  return k;
}

Eigen::MatrixXd SaabStage::respond(const Eigen::MatrixXd& blocks) const {
  if (blocks.cols() != block_dim()) throw ArgumentError("block dimension mismatch");
  Eigen::MatrixXd out = blocks * kernel().transpose();
  out.array() += bias;
  return out;
}

Eigen::MatrixXd SaabStage::reconstruct(const Eigen::MatrixXd& responses) const {
  if (responses.cols() != out_channels()) throw ArgumentError("response channel mismatch");
  return (responses.array() - bias).matrix() * kernel();
}

Eigen::MatrixXd collect_blocks(std::span<const PatchTensor> samples, int window, int channel) {
  if (samples.empty()) return {};
  const auto& first = samples.front();
  const int nc = channel < 0 ? first.channels : 1;
  const int d = window * window * nc;
  std::size_t rows = 0;
  for (const auto& x : samples) {
    check_block_shape(x, window, first.channels, "collect_blocks");
    if (channel >= x.channels) throw ArgumentError("collect_blocks: channel out of range");
    rows += static_cast<std::size_t>(x.height / window) * (x.width / window);
  }
  Eigen::MatrixXd blocks(rows, d);
  Eigen::VectorXd vec(d);
  Eigen::Index r = 0;
  for (const auto& x : samples)
    for_each_block(x, window, channel, vec,
                   [&](int, int, const Eigen::VectorXd& v) { blocks.row(r++) = v.transpose(); });
  return blocks;
}

SaabStage fit_saab_blocks(const Eigen::MatrixXd& blocks, int window, int in_channels) {
  const int d = window * window * in_channels;
  if (blocks.cols() != d) throw ArgumentError("fit_saab_blocks: block dimension mismatch");
  Moments m(d);
  const Eigen::VectorXd dc = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(double(d)));
  Eigen::VectorXd residual(d);
  for (Eigen::Index i = 0; i < blocks.rows(); ++i) {
    const Eigen::VectorXd v = blocks.row(i).transpose();
    residual = v - v.dot(dc) * dc;
    m.add(residual, v);
  }
  SaabStage stage = stage_from_moments(m, window, in_channels);
  retain_ac(stage, stage.degenerate ? 0 : d - 1, blocks);
  return stage;
}

void retain_ac(SaabStage& stage, int kept_ac, const Eigen::MatrixXd& blocks) {
  kept_ac = std::clamp(kept_ac, 0, static_cast<int>(stage.ac_filters.rows()));
  stage.ac_filters.conservativeResize(kept_ac, Eigen::NoChange);
  stage.bias = required_bias(stage, [&](auto&& sink) {
    Eigen::VectorXd v;
    for (Eigen::Index i = 0; i < blocks.rows(); ++i) {
      v = blocks.row(i).transpose();
      sink(v);
    }
  });
}

SaabStage fit_saab(std::span<const PatchTensor> samples, int window, const ChannelRule& keep) {
  if (samples.size() < 2) throw ArgumentError("fit_saab needs at least two samples");
  const int channels = samples.front().channels;
  for (const auto& x : samples) check_block_shape(x, window, channels, "fit_saab");
  const int d = window * window * channels;
  SaabStage stage = stage_from_moments(moments_of(samples, window, -1, d), window, channels);
  const std::vector<double> eig(stage.eigenvalues.data(), stage.eigenvalues.data() + stage.eigenvalues.size());
  const int kept = stage.degenerate ? 0 : select_channels(eig, keep);
  stage.ac_filters.conservativeResize(kept, Eigen::NoChange);
  stage.bias = bias_over_samples(stage, samples, -1);
  return stage;
}

PatchTensor forward_stage(const SaabStage& stage, const PatchTensor& x) {
  check_block_shape(x, stage.window, stage.in_channels, "forward_stage");
  const Eigen::MatrixXd k = stage.kernel();
  PatchTensor y(x.height / stage.window, x.width / stage.window, stage.out_channels());
  Eigen::VectorXd vec(stage.block_dim()), r(k.rows());
  for_each_block(x, stage.window, -1, vec, [&](int by, int bx, const Eigen::VectorXd& v) {
    r.noalias() = k * v;
    for (int c = 0; c < y.channels; ++c) y.at(by, bx, c) = r[c] + stage.bias;
  });
  return y;
}

namespace {

// Writes the inverse of `stage` applied to channels [c0, c0 + out_channels)
// of y into channel(s) of x starting at `dst_channel`.
void invert_group(const SaabStage& stage, const PatchTensor& y, int c0, PatchTensor& x, int dst_channel) {
  const Eigen::MatrixXd kt = stage.kernel().transpose();
  const int w = stage.window;
  Eigen::VectorXd r(stage.out_channels()), v(stage.block_dim());
  for (int by = 0; by < y.height; ++by) {
    for (int bx = 0; bx < y.width; ++bx) {
      for (int c = 0; c < r.size(); ++c) r[c] = y.at(by, bx, c0 + c) - stage.bias;
      v.noalias() = kt * r;
      int k = 0;
      for (int dy = 0; dy < w; ++dy)
        for (int dx = 0; dx < w; ++dx)
          for (int c = 0; c < stage.in_channels; ++c)
            x.at(by * w + dy, bx * w + dx, dst_channel + c) = v[k++];
    }
  }
}

}  // namespace

PatchTensor inverse_stage(const SaabStage& stage, const PatchTensor& y) {
  if (y.channels != stage.out_channels())
    throw ArgumentError("inverse_stage: expected " + std::to_string(stage.out_channels()) +
                        " channels, got " + std::to_string(y.channels));
  PatchTensor x(y.height * stage.window, y.width * stage.window, stage.in_channels);
  invert_group(stage, y, 0, x, 0);
  return x;
}

int Hop::in_channels() const {
  if (stages.empty()) return 0;
  return channelwise ? static_cast<int>(stages.size()) : stages.front().in_channels;
}

int Hop::out_channels() const {
  int total = 0;
  for (const auto& s : stages) total += s.out_channels();
  return total;
}

std::vector<int> Hop::group_sizes() const {
  std::vector<int> sizes;
  for (const auto& s : stages) sizes.push_back(s.out_channels());
  return sizes;
}

ChainConfig ChainConfig::defaults() {
  ChainConfig c;
  c.hops.push_back({2, EnergyKnee{1e-2, 6, 10}});
  c.hops.push_back({2, EnergyKnee{1e-2, 20, 30}});
  return c;
}

PatchTensor forward_hop(const Hop& hop, const PatchTensor& x) {
  if (!hop.channelwise) return forward_stage(hop.stages.front(), x);
  check_block_shape(x, hop.window(), hop.in_channels(), "forward_hop");
  const int w = hop.window();
  PatchTensor y(x.height / w, x.width / w, hop.out_channels());
  int offset = 0;
  for (int g = 0; g < static_cast<int>(hop.stages.size()); ++g) {
    const SaabStage& stage = hop.stages[g];
    const Eigen::MatrixXd k = stage.kernel();
    Eigen::VectorXd vec(stage.block_dim()), r(k.rows());
    for_each_block(x, w, g, vec, [&](int by, int bx, const Eigen::VectorXd& v) {
      r.noalias() = k * v;
      for (int c = 0; c < r.size(); ++c) y.at(by, bx, offset + c) = r[c] + stage.bias;
    });
    offset += stage.out_channels();
  }
  return y;
}

PatchTensor inverse_hop(const Hop& hop, const PatchTensor& y) {
  if (!hop.channelwise) return inverse_stage(hop.stages.front(), y);
  if (y.channels != hop.out_channels())
    throw ArgumentError("inverse_hop: expected " + std::to_string(hop.out_channels()) +
                        " channels, got " + std::to_string(y.channels));
  const int w = hop.window();
  PatchTensor x(y.height * w, y.width * w, hop.in_channels());
  int offset = 0;
  for (int g = 0; g < static_cast<int>(hop.stages.size()); ++g) {
    invert_group(hop.stages[g], y, offset, x, g);
    offset += hop.stages[g].out_channels();
  }
  return x;
}

HopChain fit_chain(std::span<const PatchTensor> samples, const ChainConfig& config,
                   std::vector<PatchTensor>* core_out) {
  if (config.hops.empty()) throw ArgumentError("fit_chain: at least one hop is required");
  if (samples.size() < 2) throw ArgumentError("fit_chain needs at least two samples");
  const auto& first = samples.front();
  HopChain chain;
  chain.shapes.push_back({first.height, first.width, first.channels});
  for (const auto& x : samples)
    if (x.height != first.height || x.width != first.width || x.channels != first.channels)
      throw ArgumentError("fit_chain: samples differ in shape");

  std::vector<PatchTensor> current;  // outputs of the previous hop
  for (std::size_t i = 0; i < config.hops.size(); ++i) {
    const HopConfig& hc = config.hops[i];
    std::span<const PatchTensor> input = i == 0 ? samples : std::span<const PatchTensor>(current);
    const HopShape in = chain.shapes.back();
    if (hc.window <= 0 || in.height % hc.window != 0 || in.width % hc.window != 0)
      throw ArgumentError("fit_chain: hop " + std::to_string(i) + " window " +
                          std::to_string(hc.window) + " does not divide " +
                          std::to_string(in.height) + "x" + std::to_string(in.width));

    Hop hop;
    hop.channelwise = i > 0;
    const int groups = hop.channelwise ? in.channels : 1;
    const int block_channels = hop.channelwise ? 1 : in.channels;
    const int d = hc.window * hc.window * block_channels;

    // (eigenvalue, group, index) over every non-degenerate group.
    std::vector<std::tuple<double, int, int>> pool;
    for (int g = 0; g < groups; ++g) {
      const int channel = hop.channelwise ? g : -1;
      hop.stages.push_back(stage_from_moments(moments_of(input, hc.window, channel, d), hc.window,
                                              block_channels));
      const SaabStage& s = hop.stages.back();
      if (s.degenerate) continue;
      for (int j = 0; j < s.eigenvalues.size(); ++j) pool.emplace_back(s.eigenvalues[j], g, j);
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    std::vector<double> sorted;
    for (const auto& p : pool) sorted.push_back(std::get<0>(p));
    const int total = select_total_channels(sorted, groups, hc.rule);

    std::vector<int> kept(groups, 0);
    for (int t = 0; t < total - groups; ++t) ++kept[std::get<1>(pool[t])];
    for (int g = 0; g < groups; ++g) {
      SaabStage& s = hop.stages[g];
      s.ac_filters.conservativeResize(kept[g], Eigen::NoChange);
      s.bias = bias_over_samples(s, input, hop.channelwise ? g : -1);
    }

    chain.shapes.push_back({in.height / hc.window, in.width / hc.window, hop.out_channels()});
    std::vector<PatchTensor> next;
    next.reserve(input.size());
    for (const auto& x : input) next.push_back(forward_hop(hop, x));
    current = std::move(next);
    chain.hops.push_back(std::move(hop));
  }
  if (core_out) *core_out = std::move(current);
  return chain;
}

PatchTensor forward_chain(const HopChain& chain, const PatchTensor& x) {
  const HopShape& in = chain.shapes.front();
  if (x.height != in.height || x.width != in.width || x.channels != in.channels)
    throw ArgumentError("forward_chain: input shape does not match the chain");
  PatchTensor y = x;
  for (const auto& hop : chain.hops) y = forward_hop(hop, y);
  return y;
}

PatchTensor inverse_chain(const HopChain& chain, const PatchTensor& z) {
  const HopShape core = chain.core_shape();
  if (z.height != core.height || z.width != core.width || z.channels != core.channels)
    throw ArgumentError("inverse_chain: core shape does not match the chain");
  PatchTensor x = z;
  for (auto it = chain.hops.rbegin(); it != chain.hops.rend(); ++it) x = inverse_hop(*it, x);
  return x;
}

}  // namespace hoptex
