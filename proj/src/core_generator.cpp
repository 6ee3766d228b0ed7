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

#include "hoptex/core_generator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hoptex/cdf.hpp"
#include "hoptex/error.hpp"

namespace hoptex {

namespace {

void orient_columns(Eigen::MatrixXd& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index idx;
    basis.col(j).cwiseAbs().maxCoeff(&idx);
    if (basis(idx, j) < 0) basis.col(j) = -basis.col(j);
  }
}

struct Pca {
  Eigen::VectorXd mean;
  Eigen::VectorXd variances;  // descending
  Eigen::MatrixXd components; // d x r, orthonormal columns, same order
};

// PCA of the rows of `x` with population (1/n) normalization. Uses the
// n x n Gram matrix when there are fewer rows than columns.
Pca principal_components(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Pca pca;
  pca.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - pca.mean.transpose();
  if (n < d) {
    const Eigen::MatrixXd gram = centered * centered.transpose() / double(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double top = std::max(eig.eigenvalues().maxCoeff(), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = n - 1; j >= 0; --j)
      if (eig.eigenvalues()[j] > 1e-12 * top && eig.eigenvalues()[j] > 0.0) keep.push_back(j);
    pca.variances.resize(keep.size());
    pca.components.resize(d, keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
      const Eigen::Index j = keep[k];
      pca.variances[k] = eig.eigenvalues()[j];
      Eigen::VectorXd v = centered.transpose() * eig.eigenvectors().col(j);
      pca.components.col(k) = v.normalized();
    }
  } else {
    const Eigen::MatrixXd cov = centered.transpose() * centered / double(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    pca.variances = eig.eigenvalues().reverse().cwiseMax(0.0);
    pca.components = eig.eigenvectors().rowwise().reverse();
  }
  orient_columns(pca.components);
  return pca;
}

}  // namespace

int SdrModel::reduced_dim() const {
  int total = 0;
  for (const auto& c : channels) total += static_cast<int>(c.basis.cols());
  return total;
}

std::vector<int> SdrModel::kept_per_channel() const {
  std::vector<int> kept;
  for (const auto& c : channels) kept.push_back(static_cast<int>(c.basis.cols()));
  return kept;
}

std::pair<SdrModel, Eigen::MatrixXd> fit_sdr(std::span<const PatchTensor> core_samples, double gamma) {
  if (core_samples.size() < 2) throw ArgumentError("fit_sdr needs at least two samples");
  if (!(gamma >= 0.0)) throw ArgumentError("fit_sdr: gamma must be non-negative");
  const auto& first = core_samples.front();
  const Eigen::Index n = static_cast<Eigen::Index>(core_samples.size());
  const int m = first.height * first.width;

  SdrModel sdr;
  sdr.height = first.height;
  sdr.width = first.width;
  std::vector<Eigen::MatrixXd> blocks;
  for (int c = 0; c < first.channels; ++c) {
    Eigen::MatrixXd maps(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& x = core_samples[i];
      if (x.height != first.height || x.width != first.width || x.channels != first.channels)
        throw ArgumentError("fit_sdr: core samples differ in shape");
      for (int p = 0; p < m; ++p) maps(i, p) = x.data[static_cast<std::size_t>(p) * x.channels + c];
    }
    Eigen::VectorXd mean = maps.colwise().mean().transpose();
    const Eigen::MatrixXd centered = maps.rowwise() - mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / double(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    Eigen::VectorXd variances = eig.eigenvalues().reverse().cwiseMax(0.0);
    Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
    orient_columns(vectors);
    int kept = 0;
    while (kept < m && variances[kept] >= gamma) ++kept;

    SdrModel::Channel ch;
    ch.mean = std::move(mean);
    ch.basis = vectors.leftCols(kept);
    ch.variances = std::move(variances);
    blocks.push_back(centered * ch.basis);
    sdr.channels.push_back(std::move(ch));
  }
  const int dr = sdr.reduced_dim();
  if (dr == 0) throw FitError("fit_sdr: gamma " + std::to_string(gamma) + " discards every component");
  Eigen::MatrixXd reduced(n, dr);
  Eigen::Index offset = 0;
  for (const auto& b : blocks) {
    reduced.middleCols(offset, b.cols()) = b;
    offset += b.cols();
  }
  return {std::move(sdr), std::move(reduced)};
}

Eigen::VectorXd forward_sdr(const SdrModel& sdr, const PatchTensor& x) {
  if (x.height != sdr.height || x.width != sdr.width ||
      x.channels != static_cast<int>(sdr.channels.size()))
    throw ArgumentError("forward_sdr: tensor shape does not match the model");
  const int m = sdr.map_size();
  Eigen::VectorXd z(sdr.reduced_dim());
  Eigen::VectorXd map(m);
  Eigen::Index offset = 0;
  for (int c = 0; c < x.channels; ++c) {
    const auto& ch = sdr.channels[c];
    for (int p = 0; p < m; ++p) map[p] = x.data[static_cast<std::size_t>(p) * x.channels + c];
    z.segment(offset, ch.basis.cols()) = ch.basis.transpose() * (map - ch.mean);
    offset += ch.basis.cols();
  }
  return z;
}

PatchTensor inverse_sdr(const SdrModel& sdr, const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (z.size() != sdr.reduced_dim())
    throw ArgumentError("inverse_sdr: expected " + std::to_string(sdr.reduced_dim()) +
                        " coefficients, got " + std::to_string(z.size()));
  const int channels = static_cast<int>(sdr.channels.size());
  PatchTensor x(sdr.height, sdr.width, channels);
  const int m = sdr.map_size();
  Eigen::Index offset = 0;
  for (int c = 0; c < channels; ++c) {
    const auto& ch = sdr.channels[c];
    const Eigen::VectorXd map = ch.mean + ch.basis * z.segment(offset, ch.basis.cols());
    offset += ch.basis.cols();
    for (int p = 0; p < m; ++p) x.data[static_cast<std::size_t>(p) * channels + c] = map[p];
  }
  return x;
}

void Cluster::refresh_derived() {
  if (whitening.rows() == 0) {
    dewhitening.resize(mean.size(), 0);
    return;
  }
  const Eigen::MatrixXd gram = whitening * whitening.transpose();
  dewhitening = whitening.transpose() * gram.ldlt().solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
}

int CoreModel::cdf_count() const {
  int total = 0;
  for (const auto& c : clusters) total += c.components();
  return total;
}

void CoreModel::refresh_derived() {
  for (auto& c : clusters) c.refresh_derived();
}

CoreModel fit_core(SdrModel sdr, const Eigen::MatrixXd& reduced, const CoreConfig& config) {
  const Eigen::Index n = reduced.rows(), dr = reduced.cols();
  if (config.clusters <= 0) throw ArgumentError("fit_core: cluster count must be positive");
  if (config.clusters > n)
    throw ArgumentError("fit_core: " + std::to_string(config.clusters) + " clusters for " +
                        std::to_string(n) + " samples");
  if (config.codebook_size < 0) throw ArgumentError("fit_core: codebook size must be >= 0");
  if (!(config.whitening_energy > 0.0 && config.whitening_energy <= 1.0))
    throw ArgumentError("fit_core: whitening energy must lie in (0, 1]");

  CoreModel model;
  model.sdr = std::move(sdr);
  model.core_height = model.sdr.height;
  model.core_width = model.sdr.width;
  model.core_channels = static_cast<int>(model.sdr.channels.size());

  KMeansOptions km = config.kmeans;
  km.seed = derive_seed(config.seed, 1);
  const KMeansResult clustering = kmeans(reduced, config.clusters, km);

  std::vector<std::vector<Eigen::Index>> members(config.clusters);
  for (Eigen::Index i = 0; i < n; ++i) members[clustering.labels[i]].push_back(i);

  std::vector<Eigen::VectorXd> tables;
  std::vector<double> sample_max;  // per training sample, max source value
  for (int c = 0; c < config.clusters; ++c) {
    const auto& idx = members[c];
    Eigen::MatrixXd x(idx.size(), dr);
    for (std::size_t r = 0; r < idx.size(); ++r) x.row(r) = reduced.row(idx[r]);

    Cluster cluster;
    cluster.members = idx.size();
    cluster.probability = static_cast<double>(idx.size()) / static_cast<double>(n);
    const Pca pca = principal_components(x);
    cluster.mean = pca.mean;

    const double total = pca.variances.sum();
    Eigen::Index keep = 0;
    if (total > 0.0) {
      double acc = 0.0;
      while (keep < pca.variances.size() && acc < config.whitening_energy * total && pca.variances[keep] > 0.0)
        acc += pca.variances[keep++];
    }
    cluster.whitening = pca.variances.head(keep).cwiseSqrt().cwiseInverse().asDiagonal() *
                        pca.components.leftCols(keep).transpose();

    const Eigen::MatrixXd centered = x.rowwise() - cluster.mean.transpose();
    const Eigen::MatrixXd whitened = centered * cluster.whitening.transpose();

    cluster.unmixing = Eigen::MatrixXd::Identity(keep, keep);
    if (keep > 0 && static_cast<Eigen::Index>(idx.size()) >= keep + 1) {
      IcaOptions ica = config.ica;
      ica.seed = derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(c));
      IcaResult result = fastica(whitened, ica);
      cluster.ica_converged = result.converged;
      if (result.converged) cluster.unmixing = std::move(result.unmixing);
    }
    cluster.mixing = keep > 0 ? Eigen::MatrixXd(cluster.unmixing.inverse()) : Eigen::MatrixXd(0, 0);

    const Eigen::MatrixXd sources = whitened * cluster.unmixing.transpose();
    for (Eigen::Index j = 0; j < keep; ++j) {
      const Eigen::VectorXd col = sources.col(j);
      const std::span<const double> values(col.data(), static_cast<std::size_t>(col.size()));
      cluster.cdfs.push_back({static_cast<int>(tables.size()), col.minCoeff(), col.maxCoeff()});
      tables.push_back(inverse_cdf_table(values));
    }
    if (keep > 0)
      for (Eigen::Index r = 0; r < sources.rows(); ++r) sample_max.push_back(sources.row(r).maxCoeff());
    model.clusters.push_back(std::move(cluster));
  }

  // Vector-quantize the normalized inverse CDFs.
  const int f = static_cast<int>(tables.size());
  Eigen::MatrixXd all(f, kCdfBins);
  for (int i = 0; i < f; ++i) all.row(i) = tables[i].transpose();
  const int w = config.codebook_size == 0 ? f : std::min(config.codebook_size, f);
  if (w == f) {
    model.codebook.codewords = std::move(all);
  } else {
    KMeansOptions vq = config.kmeans;
    vq.seed = derive_seed(config.seed, 2);
    const KMeansResult q = kmeans(all, w, vq);
    model.codebook.codewords = q.centroids;
    for (auto& cluster : model.clusters)
      for (auto& ref : cluster.cdfs) ref.codeword = q.labels[ref.codeword];
  }

  model.interval.assign(1, 0.0);
  double acc = 0.0;
  for (const auto& cluster : model.clusters) model.interval.push_back(acc += cluster.probability);
  model.interval.back() = 1.0;

  if (!std::isnan(config.rejection_threshold)) {
    model.rejection_threshold = config.rejection_threshold;
  } else if (sample_max.empty()) {
    model.rejection_threshold = -std::numeric_limits<double>::infinity();
  } else {
    std::sort(sample_max.begin(), sample_max.end());
    const double p = std::clamp(config.rejection_percentile, 0.0, 1.0);
    model.rejection_threshold = sample_max[static_cast<std::size_t>(p * double(sample_max.size() - 1))];
  }
  model.refresh_derived();
  return model;
}

int locate_cluster(std::span<const double> interval, double u) {
  if (interval.size() < 2) throw ArgumentError("locate_cluster: empty interval representation");
  const auto inner_begin = interval.begin() + 1;
  const auto inner_end = interval.end() - 1;
  return static_cast<int>(std::upper_bound(inner_begin, inner_end, u) - inner_begin);
}

Eigen::VectorXd cdf_table(const CoreModel& model, const CdfRef& ref) {
  return model.codebook.codewords.row(ref.codeword).transpose();
}

ReducedSample sample_reduced(const CoreModel& model, Rng& rng) {
  if (model.clusters.empty()) throw ArgumentError("sample_reduced: model has no clusters");
  ReducedSample out;
  for (int attempt = 1; attempt <= kMaxRejections; ++attempt) {
    const int c = locate_cluster(model.interval, rng.uniform());
    const Cluster& cluster = model.clusters[c];
    const int k = cluster.components();
    std::vector<double> sources(k);
    bool accept = k == 0;
    for (int j = 0; j < k; ++j) {
      const CdfRef& ref = cluster.cdfs[j];
      const double q = normal_cdf(rng.normal());
      sources[j] = ref.min + lookup_quantile(model.codebook.codewords.row(ref.codeword).transpose(), q) *
                                 (ref.max - ref.min);
      accept = accept || sources[j] > model.rejection_threshold;
    }
    if (!accept) continue;

    const Eigen::Map<const Eigen::VectorXd> s(sources.data(), k);
    out.z = cluster.mean;
    if (k > 0) out.z.noalias() += cluster.dewhitening * (cluster.mixing * s);
    out.sources = std::move(sources);
    out.cluster = c;
    out.attempts = attempt;
    return out;
  }
  throw SamplingError("core sampling rejected " + std::to_string(kMaxRejections) +
                      " consecutive draws; rejection threshold " +
                      std::to_string(model.rejection_threshold) + " is too high");
}

PatchTensor sample_core(const CoreModel& model, std::uint64_t seed) {
  Rng rng(seed);
  return inverse_sdr(model.sdr, sample_reduced(model, rng).z);
}

}  // namespace hoptex
