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

#include "hoptex/serialize.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "hoptex/cdf.hpp"
#include "hoptex/error.hpp"

namespace hoptex {

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(int v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  template <typename Derived>
  void matrix(const Eigen::DenseBase<Derived>& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  void vector(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void ints(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) i32(x);
  }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == in_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("model container: " + what + " at byte offset " + std::to_string(pos_), pos_);
  }
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) fail("unexpected end of data");
  }
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  int i32() { return static_cast<int>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool flag() {
    const std::uint8_t v = u8();
    if (v > 1) fail("invalid boolean");
    return v == 1;
  }
  int count(int lo, int hi, const char* what) {
    const int v = i32();
    if (v < lo || v > hi) fail(std::string("invalid ") + what + " " + std::to_string(v));
    return v;
  }
  std::size_t length(std::size_t element_size) {
    const std::uint64_t n = u64();
    if (n > (in_.size() - pos_) / element_size) fail("length exceeds remaining data");
    return static_cast<std::size_t>(n);
  }

  template <typename Matrix = Eigen::MatrixXd>
  Matrix matrix() {
    const std::uint64_t rows = u64(), cols = u64();
    if (rows != 0 && cols > (in_.size() - pos_) / 8 / rows) fail("matrix exceeds remaining data");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
    return m;
  }
  Eigen::VectorXd vector() {
    Eigen::VectorXd v(static_cast<Eigen::Index>(length(8)));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64();
    return v;
  }
  std::vector<double> doubles() {
    std::vector<double> v(length(8));
    for (double& x : v) x = f64();
    return v;
  }
  std::vector<int> ints() {
    std::vector<int> v(length(4));
    for (int& x : v) x = i32();
    return v;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

constexpr int kMaxDim = 1 << 24;

void write_rule(Writer& w, const ChannelRule& rule) {
  if (const auto* f = std::get_if<FixedCount>(&rule)) {
    w.u8(0);
    w.i32(f->count);
  } else {
    const auto& k = std::get<EnergyKnee>(rule);
    w.u8(1);
    w.f64(k.sensitivity);
    w.i32(k.min_count);
    w.i32(k.max_count);
  }
}

ChannelRule read_rule(Reader& r) {
  switch (r.u8()) {
    case 0:
      return FixedCount{r.i32()};
    case 1: {
      EnergyKnee k;
      k.sensitivity = r.f64();
      k.min_count = r.i32();
      k.max_count = r.i32();
      return k;
    }
    default:
      r.fail("unknown channel rule");
  }
}

void write_config(Writer& w, const TrainConfig& c) {
  w.i32(c.patch_size);
  if (const auto* s = std::get_if<StridedCrop>(&c.crop)) {
    w.u8(0);
    w.i32(s->stride);
  } else {
    const auto& rc = std::get<RandomCrop>(c.crop);
    w.u8(1);
    w.u64(rc.count);
    w.u64(rc.seed);
  }
  w.u32(static_cast<std::uint32_t>(c.chain.hops.size()));
  for (const auto& h : c.chain.hops) {
    w.i32(h.window);
    write_rule(w, h.rule);
  }
  w.f64(c.gamma);
  const CoreConfig& k = c.core;
  w.i32(k.clusters);
  w.i32(k.codebook_size);
  w.f64(k.whitening_energy);
  w.i32(k.kmeans.restarts);
  w.i32(k.kmeans.max_iterations);
  w.f64(k.kmeans.tolerance);
  w.u64(k.kmeans.seed);
  w.f64(k.ica.tolerance);
  w.i32(k.ica.max_iterations);
  w.u64(k.ica.seed);
  w.f64(k.rejection_percentile);
  w.f64(k.rejection_threshold);
  w.u64(k.seed);
  w.u64(c.seed);
}

TrainConfig read_config(Reader& r) {
  TrainConfig c;
  c.patch_size = r.count(1, kMaxDim, "patch size");
  switch (r.u8()) {
    case 0:
      c.crop = StridedCrop{r.i32()};
      break;
    case 1: {
      RandomCrop rc;
      rc.count = r.u64();
      rc.seed = r.u64();
      c.crop = rc;
      break;
    }
    default:
      r.fail("unknown crop mode");
  }
  const std::uint32_t hops = r.u32();
  if (hops == 0 || hops > 64) r.fail("invalid hop count");
  c.chain.hops.clear();
  for (std::uint32_t i = 0; i < hops; ++i) {
    HopConfig h;
    h.window = r.count(1, kMaxDim, "window");
    h.rule = read_rule(r);
    c.chain.hops.push_back(h);
  }
  c.gamma = r.f64();
  CoreConfig& k = c.core;
  k.clusters = r.i32();
  k.codebook_size = r.i32();
  k.whitening_energy = r.f64();
  k.kmeans.restarts = r.i32();
  k.kmeans.max_iterations = r.i32();
  k.kmeans.tolerance = r.f64();
  k.kmeans.seed = r.u64();
  k.ica.tolerance = r.f64();
  k.ica.max_iterations = r.i32();
  k.ica.seed = r.u64();
  k.rejection_percentile = r.f64();
  k.rejection_threshold = r.f64();
  k.seed = r.u64();
  c.seed = r.u64();
  return c;
}

void write_dims(Writer& w, const ModelDims& d) {
  w.i32(d.input_channels);
  w.ints(d.windows);
  w.ints(d.hop_channels);
  w.i32(d.core_map);
  w.i32(d.reduced_dim);
  w.i32(d.clusters);
  w.i32(d.cdfs);
  w.i32(d.codewords);
}

ModelDims read_dims(Reader& r) {
  ModelDims d;
  d.input_channels = r.i32();
  d.windows = r.ints();
  d.hop_channels = r.ints();
  d.core_map = r.i32();
  d.reduced_dim = r.i32();
  d.clusters = r.i32();
  d.cdfs = r.i32();
  d.codewords = r.i32();
  return d;
}

void write_chain(Writer& w, const HopChain& chain) {
  w.u32(static_cast<std::uint32_t>(chain.shapes.size()));
  for (const auto& s : chain.shapes) {
    w.i32(s.height);
    w.i32(s.width);
    w.i32(s.channels);
  }
  w.u32(static_cast<std::uint32_t>(chain.hops.size()));
  for (const auto& hop : chain.hops) {
    w.u8(hop.channelwise ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(hop.stages.size()));
    for (const auto& s : hop.stages) {
      w.i32(s.window);
      w.i32(s.in_channels);
      w.f64(s.bias);
      w.u8(s.degenerate ? 1 : 0);
      w.vector(s.eigenvalues);
      w.matrix(s.ac_filters);
    }
  }
}

HopChain read_chain(Reader& r) {
  HopChain chain;
  const std::uint32_t shapes = r.u32();
  if (shapes < 2 || shapes > 65) r.fail("invalid shape count");
  for (std::uint32_t i = 0; i < shapes; ++i) {
    HopShape s;
    s.height = r.count(1, kMaxDim, "height");
    s.width = r.count(1, kMaxDim, "width");
    s.channels = r.count(1, kMaxDim, "channel count");
    chain.shapes.push_back(s);
  }
  const std::uint32_t hops = r.u32();
  if (hops + 1 != shapes) r.fail("hop count does not match shape list");
  for (std::uint32_t i = 0; i < hops; ++i) {
    Hop hop;
    hop.channelwise = r.flag();
    const std::uint32_t stages = r.u32();
    if (stages == 0 || stages > static_cast<std::uint32_t>(kMaxDim)) r.fail("invalid stage count");
    for (std::uint32_t k = 0; k < stages; ++k) {
      SaabStage s;
      s.window = r.count(1, 4096, "window");
      s.in_channels = r.count(1, kMaxDim, "stage channel count");
      s.bias = r.f64();
      s.degenerate = r.flag();
      s.eigenvalues = r.vector();
      s.ac_filters = r.matrix();
      if (s.eigenvalues.size() != s.block_dim() - 1 || s.ac_filters.cols() != s.block_dim() ||
          s.ac_filters.rows() > s.block_dim() - 1)
        r.fail("Saab stage dimensions are inconsistent");
      hop.stages.push_back(std::move(s));
    }
    const HopShape& in = chain.shapes[i];
    const HopShape& out = chain.shapes[i + 1];
    const int w = hop.window();
    for (const auto& s : hop.stages)
      if (s.window != w || s.in_channels != (hop.channelwise ? 1 : in.channels))
        r.fail("Saab stage does not match its hop");
    if (hop.in_channels() != in.channels || hop.out_channels() != out.channels ||
        in.height != out.height * w || in.width != out.width * w)
      r.fail("hop shapes are inconsistent");
    chain.hops.push_back(std::move(hop));
  }
  return chain;
}

void write_core(Writer& w, const CoreModel& core) {
  w.i32(core.core_height);
  w.i32(core.core_width);
  w.i32(core.core_channels);
  w.i32(core.sdr.height);
  w.i32(core.sdr.width);
  w.u32(static_cast<std::uint32_t>(core.sdr.channels.size()));
  for (const auto& ch : core.sdr.channels) {
    w.vector(ch.mean);
    w.matrix(ch.basis);
    w.vector(ch.variances);
  }
  w.u32(static_cast<std::uint32_t>(core.clusters.size()));
  for (const auto& c : core.clusters) {
    w.f64(c.probability);
    w.u64(c.members);
    w.u8(c.ica_converged ? 1 : 0);
    w.vector(c.mean);
    w.matrix(c.whitening);
    w.matrix(c.unmixing);
    w.matrix(c.mixing);
    w.u64(c.cdfs.size());
    for (const auto& ref : c.cdfs) {
      w.i32(ref.codeword);
      w.f64(ref.min);
      w.f64(ref.max);
    }
  }
  w.matrix(core.codebook.codewords);
  w.doubles(core.interval);
  w.f64(core.rejection_threshold);
}

CoreModel read_core(Reader& r) {
  CoreModel core;
  core.core_height = r.count(1, kMaxDim, "core height");
  core.core_width = r.count(1, kMaxDim, "core width");
  core.core_channels = r.count(1, kMaxDim, "core channels");
  core.sdr.height = r.count(1, kMaxDim, "SDR height");
  core.sdr.width = r.count(1, kMaxDim, "SDR width");
  const std::uint32_t channels = r.u32();
  if (channels != static_cast<std::uint32_t>(core.core_channels)) r.fail("SDR channel count mismatch");
  const Eigen::Index m = core.sdr.map_size();
  for (std::uint32_t c = 0; c < channels; ++c) {
    SdrModel::Channel ch;
    ch.mean = r.vector();
    ch.basis = r.matrix();
    ch.variances = r.vector();
    if (ch.mean.size() != m || ch.basis.rows() != m || ch.basis.cols() > m || ch.variances.size() != m)
      r.fail("SDR channel dimensions are inconsistent");
    core.sdr.channels.push_back(std::move(ch));
  }
  const Eigen::Index dr = core.sdr.reduced_dim();
  const std::uint32_t clusters = r.u32();
  if (clusters == 0 || clusters > static_cast<std::uint32_t>(kMaxDim)) r.fail("invalid cluster count");
  for (std::uint32_t i = 0; i < clusters; ++i) {
    Cluster c;
    c.probability = r.f64();
    c.members = r.u64();
    c.ica_converged = r.flag();
    c.mean = r.vector();
    c.whitening = r.matrix();
    c.unmixing = r.matrix();
    c.mixing = r.matrix();
    const Eigen::Index k = c.whitening.rows();
    if (c.mean.size() != dr || c.whitening.cols() != dr || c.unmixing.rows() != k ||
        c.unmixing.cols() != k || c.mixing.rows() != k || c.mixing.cols() != k)
      r.fail("cluster dimensions are inconsistent");
    const std::size_t cdfs = r.length(20);
    if (cdfs != static_cast<std::size_t>(k)) r.fail("cluster CDF count mismatch");
    for (std::size_t j = 0; j < cdfs; ++j) {
      CdfRef ref;
      ref.codeword = r.i32();
      ref.min = r.f64();
      ref.max = r.f64();
      c.cdfs.push_back(ref);
    }
    core.clusters.push_back(std::move(c));
  }
  core.codebook.codewords = r.matrix<decltype(core.codebook.codewords)>();
  if (core.codebook.size() > 0 && core.codebook.codewords.cols() != kCdfBins)
    r.fail("codebook tables must have 256 bins");
  for (const auto& c : core.clusters)
    for (const auto& ref : c.cdfs)
      if (ref.codeword < 0 || ref.codeword >= core.codebook.size()) r.fail("CDF codeword out of range");
  core.interval = r.doubles();
  if (core.interval.size() != core.clusters.size() + 1) r.fail("interval representation size mismatch");
  for (std::size_t i = 1; i < core.interval.size(); ++i)
    if (!(core.interval[i] > core.interval[i - 1])) r.fail("interval boundaries are not increasing");
  core.rejection_threshold = r.f64();
  core.refresh_derived();
  return core;
}

}  // namespace

std::vector<std::uint8_t> serialize(const TextureModel& model) {
  Writer w;
  w.bytes(kModelMagic, sizeof(kModelMagic));
  w.u32(kModelVersion);
  write_dims(w, model.declared);
  write_config(w, model.config);
  w.u64(model.provenance.exemplar_hash);
  w.i32(model.provenance.exemplar_height);
  w.i32(model.provenance.exemplar_width);
  w.u64(model.provenance.training_patches);
  write_chain(w, model.chain);
  write_core(w, model.core);
  w.bytes("END.", 4);
  return w.take();
}

TextureModel deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[sizeof(kModelMagic)];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw FormatError("model container: bad magic at byte offset 0", 0);
  }
  const std::uint32_t version = r.u32();
  if (version != kModelVersion)
    throw FormatError("model container: unsupported version " + std::to_string(version) +
                          " at byte offset 8",
                      8);
  TextureModel model;
  model.declared = read_dims(r);
  model.config = read_config(r);
  model.provenance.exemplar_hash = r.u64();
  model.provenance.exemplar_height = r.i32();
  model.provenance.exemplar_width = r.i32();
  model.provenance.training_patches = r.u64();
  model.chain = read_chain(r);
  model.core = read_core(r);
  const HopShape core = model.chain.core_shape();
  if (core.height != model.core.core_height || core.width != model.core.core_width ||
      core.channels != model.core.core_channels)
    r.fail("chain core shape does not match the core model");
  char end[4];
  r.bytes(end, 4);
  if (std::memcmp(end, "END.", 4) != 0) r.fail("missing end marker");
  if (!r.done()) r.fail("trailing bytes");
  return model;
}

void save_model(const TextureModel& model, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

TextureModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace hoptex
