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

#include <cmath>
#include <limits>
#include <random>

#include "hoptex/cdf.hpp"
#include "hoptex/core_generator.hpp"
#include "hoptex/error.hpp"
#include "hoptex/fastica.hpp"
#include "hoptex/kmeans.hpp"
#include "support.hpp"

using namespace hoptex;

namespace {

std::vector<double> gaussian_draws(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = g(gen);
  return out;
}

// Training-side ICA sources of one cluster, recomputed from its stored maps.
Eigen::MatrixXd cluster_sources(const Cluster& c, const Eigen::MatrixXd& members) {
  const Eigen::MatrixXd centered = members.rowwise() - c.mean.transpose();
  return centered * c.whitening.transpose() * c.unmixing.transpose();
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& data, const std::vector<int>& labels, int which) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == which) idx.push_back(static_cast<Eigen::Index>(i));
  Eigen::MatrixXd out(idx.size(), data.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(r) = data.row(idx[r]);
  return out;
}

}  // namespace

TEST_CASE("normal_cdf reference values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429));
  CHECK(normal_cdf(-1.959963984540054) == doctest::Approx(0.025));
}

TEST_CASE("inverse_cdf_table") {
  SUBCASE("endpoints and monotonicity") {
    const auto g = gaussian_draws(5000, 1);
    const Eigen::VectorXd t = inverse_cdf_table(g);
    REQUIRE(t.size() == kCdfBins);
    CHECK(t[0] == 0.0);
    CHECK(t[kCdfBins - 1] == 1.0);
    for (int k = 1; k < kCdfBins; ++k) CHECK(t[k] >= t[k - 1]);
  }
  SUBCASE("constant input gives an all-zero table") {
    const std::vector<double> c(10, 3.5);
    CHECK(inverse_cdf_table(c).isZero());
  }
  SUBCASE("evenly spread values give a near-linear table") {
    std::vector<double> v;
    for (int i = 0; i < 256 * 40; ++i) v.push_back((i + 0.5) / (256 * 40));
    const Eigen::VectorXd t = inverse_cdf_table(v);
    for (int k = 0; k < kCdfBins; ++k) CHECK(std::abs(t[k] - k / 255.0) <= 2.0 / 256);
  }
  SUBCASE("table quantiles agree with sorted-sample quantiles") {
    auto g = gaussian_draws(20000, 2);
    const Eigen::VectorXd t = inverse_cdf_table(g);
    std::sort(g.begin(), g.end());
    const double lo = g.front(), hi = g.back();
    for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      const double empirical = g[static_cast<std::size_t>(q * (g.size() - 1))];
      const double table = lo + lookup_quantile(t, q) * (hi - lo);
      CHECK(std::abs(table - empirical) <= (hi - lo) / kCdfBins);
    }
  }
}

TEST_CASE("match_histogram") {
  auto g = gaussian_draws(10000, 3);
  const Eigen::VectorXd table = inverse_cdf_table(g);
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());

  SUBCASE("g = 0 maps to the training median") {
    const std::vector<double> zero{0.0};
    std::vector<double> sorted = g;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[4999] + sorted[5000]);
    CHECK(std::abs(match_histogram(zero, table, *lo, *hi)[0] - median) <= (*hi - *lo) / kCdfBins);
  }
  SUBCASE("identity table returns the Gaussian CDF") {
    Eigen::VectorXd identity(kCdfBins);
    for (int k = 0; k < kCdfBins; ++k) identity[k] = k / 255.0;
    const std::vector<double> x{-2.0, -0.3, 0.0, 0.7, 1.5};
    const auto out = match_histogram(x, identity, 0.0, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(out[i] == doctest::Approx(normal_cdf(x[i])).epsilon(1e-12));
  }
  SUBCASE("self-matching N(0,1) stays N(0,1)") {
    const auto fresh = gaussian_draws(10000, 4);
    const auto out = match_histogram(fresh, table, *lo, *hi);
    CHECK(test::ks_one_sample(out, normal_cdf) <= 0.05);
  }
}

TEST_CASE("kmeans") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> g(0.0, 0.5);
  const Eigen::Vector2d centres[3] = {{0, 0}, {10, 0}, {0, 10}};
  Eigen::MatrixXd data(300, 2);
  for (int i = 0; i < 300; ++i) data.row(i) = (centres[i % 3] + Eigen::Vector2d(g(gen), g(gen))).transpose();

  KMeansOptions opts;
  opts.seed = 11;
  const KMeansResult r = kmeans(data, 3, opts);
  REQUIRE(r.centroids.rows() == 3);
  // Each true centre is recovered.
  for (const auto& c : centres) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 3; ++j) best = std::min(best, (r.centroids.row(j).transpose() - c).norm());
    CHECK(best < 0.3);
  }
  // Labels are nearest-centroid assignments (brute force).
  double inertia = 0.0;
  for (int i = 0; i < 300; ++i) {
    int arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 3; ++j) {
      const double d = (data.row(i) - r.centroids.row(j)).squaredNorm();
      if (d < best) best = d, arg = j;
    }
    CHECK(r.labels[i] == arg);
    inertia += best;
  }
  CHECK(r.inertia == doctest::Approx(inertia).epsilon(1e-9));

  const KMeansResult again = kmeans(data, 3, opts);
  CHECK(again.labels == r.labels);
  CHECK(again.centroids == r.centroids);

  CHECK_THROWS_AS(kmeans(data, 0, opts), ArgumentError);
  CHECK_THROWS_AS(kmeans(data.topRows(2), 3, opts), ArgumentError);
}

TEST_CASE("kmeans leaves no cluster empty on duplicate-heavy data") {
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(20, 3);
  data.row(19) << 1, 1, 1;
  data.row(18) << 2, 0, 0;
  KMeansOptions opts;
  opts.seed = 3;
  const KMeansResult r = kmeans(data, 3, opts);
  std::vector<int> counts(3, 0);
  for (int l : r.labels) ++counts[l];
  for (int c : counts) CHECK(c > 0);
}

TEST_CASE("fastica unmixes independent uniform sources") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-std::sqrt(3.0), std::sqrt(3.0));
  const int n = 5000;
  Eigen::MatrixXd s(n, 3);
  for (int i = 0; i < s.size(); ++i) s.data()[i] = u(gen);
  Eigen::Matrix3d a;
  a << 1.0, 0.5, 0.2, -0.3, 1.0, 0.4, 0.6, -0.2, 1.0;
  const Eigen::MatrixXd x = s * a.transpose();

  // Whiten with an explicit covariance eigensolve from the test oracle.
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  test::jacobi_eigen(centered.transpose() * centered / n, values, vectors);
  const Eigen::MatrixXd whiten = values.cwiseSqrt().cwiseInverse().asDiagonal() * vectors.transpose();
  const Eigen::MatrixXd z = centered * whiten.transpose();

  IcaOptions opts;
  opts.seed = 4;
  const IcaResult r = fastica(z, opts);
  CHECK(r.converged);
  CHECK((r.unmixing * r.unmixing.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-8);

  // Each recovered component correlates with exactly one true source.
  const Eigen::MatrixXd y = z * r.unmixing.transpose();
  const Eigen::MatrixXd sc = s.rowwise() - s.colwise().mean();
  for (int j = 0; j < 3; ++j) {
    double best = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double corr = std::abs(y.col(j).dot(sc.col(k))) / (y.col(j).norm() * sc.col(k).norm());
      best = std::max(best, corr);
    }
    CHECK(best > 0.99);
  }

  const IcaResult again = fastica(z, opts);
  CHECK(again.unmixing == r.unmixing);
}

TEST_CASE("symmetric_decorrelation returns an orthogonal matrix") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> g;
  Eigen::MatrixXd w(5, 5);
  for (int i = 0; i < 25; ++i) w.data()[i] = g(gen);
  const Eigen::MatrixXd o = symmetric_decorrelation(w);
  CHECK((o * o.transpose() - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fit_sdr") {
  std::mt19937_64 gen(6);
  std::vector<PatchTensor> samples;
  for (int i = 0; i < 200; ++i) {
    PatchTensor t = test::random_tensor(4, 4, 3, gen, -5.0, 5.0);
    for (int p = 0; p < 16; ++p) t.data[p * 3 + 2] = 42.0;  // constant channel
    samples.push_back(std::move(t));
  }

  SUBCASE("gamma = 0 keeps every non-constant direction") {
    const auto [sdr, reduced] = fit_sdr(samples, 0.0);
    CHECK(sdr.kept_per_channel() == std::vector<int>{16, 16, 16});
    CHECK(sdr.reduced_dim() == 48);
    CHECK(reduced.rows() == 200);
    CHECK(reduced.cols() == 48);
    for (const auto& p : samples) {
      const PatchTensor back = inverse_sdr(sdr, forward_sdr(sdr, p));
      CHECK(test::relative_error(back, p) <= 1e-10);
    }
    // Row i of the reduced matrix is forward_sdr of sample i.
    CHECK((reduced.row(7).transpose() - forward_sdr(sdr, samples[7])).norm() <= 1e-9);
  }

  SUBCASE("gamma > 0 drops the constant channel and keeps variances above gamma") {
    const double gamma = 8.0;
    const auto [sdr, reduced] = fit_sdr(samples, gamma);
    CHECK(sdr.kept_per_channel()[2] == 0);
    for (const auto& ch : sdr.channels) {
      const int kept = static_cast<int>(ch.basis.cols());
      for (int j = 0; j < ch.variances.size(); ++j) CHECK((ch.variances[j] >= gamma) == (j < kept));
      if (kept > 0)
        CHECK((ch.basis.transpose() * ch.basis - Eigen::MatrixXd::Identity(kept, kept)).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }

  SUBCASE("spectrum matches the covariance oracle") {
    const auto [sdr, reduced] = fit_sdr(samples, 0.0);
    Eigen::MatrixXd maps(200, 16);
    for (int i = 0; i < 200; ++i)
      for (int p = 0; p < 16; ++p) maps(i, p) = samples[i].data[p * 3 + 1];
    const Eigen::MatrixXd c = maps.rowwise() - maps.colwise().mean();
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    test::jacobi_eigen(c.transpose() * c / 200.0, values, vectors);
    for (int j = 0; j < 16; ++j) CHECK(sdr.channels[1].variances[j] == doctest::Approx(values[j]).epsilon(1e-9));
  }

  SUBCASE("z = 0 gives the channel means and random z round-trips") {
    const auto [sdr, reduced] = fit_sdr(samples, 8.0);
    const PatchTensor mean = inverse_sdr(sdr, Eigen::VectorXd::Zero(sdr.reduced_dim()));
    for (int c = 0; c < 3; ++c)
      for (int p = 0; p < 16; ++p) CHECK(mean.data[p * 3 + c] == doctest::Approx(sdr.channels[c].mean[p]));
    CHECK(mean.data[2] == doctest::Approx(42.0));
    std::normal_distribution<double> g(0.0, 3.0);
    Eigen::VectorXd z(sdr.reduced_dim());
    for (auto& v : z) v = g(gen);
    CHECK((forward_sdr(sdr, inverse_sdr(sdr, z)) - z).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK_THROWS_AS(inverse_sdr(sdr, Eigen::VectorXd::Zero(sdr.reduced_dim() + 1)), ArgumentError);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(fit_sdr(std::span(samples).first(1), 0.0), ArgumentError);
    CHECK_THROWS_AS(fit_sdr(samples, -1.0), ArgumentError);
    CHECK_THROWS_AS(fit_sdr(samples, 1e9), FitError);
  }
}

TEST_CASE("fit_sdr dimension law on core-sized maps") {
  std::mt19937_64 gen(12);
  std::vector<PatchTensor> samples;
  for (int i = 0; i < 150; ++i) samples.push_back(test::random_tensor(8, 8, 5, gen));
  CHECK(fit_sdr(samples, 0.0).first.reduced_dim() == 64 * 5);
  int previous = std::numeric_limits<int>::max();
  for (double gamma : {0.0, 0.0005, 0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.1}) {
    const int dr = fit_sdr(samples, gamma * 255 * 255).first.reduced_dim();
    CHECK(dr <= previous);
    previous = dr;
  }
}

TEST_CASE("fit_core with a single cluster") {
  const auto blobs = test::two_blobs(400, 0.5, 7);
  auto [sdr, reduced] = fit_sdr(blobs.samples, 0.0);
  CoreConfig cfg;
  cfg.clusters = 1;
  cfg.codebook_size = 3;
  cfg.whitening_energy = 1.0;
  cfg.seed = 1;
  const CoreModel m = fit_core(sdr, reduced, cfg);
  REQUIRE(m.clusters.size() == 1);
  CHECK(m.clusters[0].probability == 1.0);
  CHECK(m.interval == std::vector<double>{0.0, 1.0});
  CHECK(m.clusters[0].components() == 4);
  CHECK(m.codebook.size() == 3);
  CHECK(m.cdf_count() == 4);
  CHECK_THROWS_AS(fit_core(sdr, reduced, CoreConfig{.clusters = 401}), ArgumentError);
}

TEST_CASE("fit_core on two blobs") {
  const auto blobs = test::two_blobs(10000, 0.3, 21);
  auto [sdr, reduced] = fit_sdr(blobs.samples, 0.0);
  CoreConfig cfg;
  cfg.clusters = 2;
  cfg.codebook_size = 0;  // exact tables
  cfg.seed = 5;
  const CoreModel m = fit_core(sdr, reduced, cfg);
  REQUIRE(m.clusters.size() == 2);

  // The first blob sits at +60 on the first pixel.
  const int blob0 = inverse_sdr(sdr, m.clusters[0].mean).data[0] > 0 ? 0 : 1;
  CHECK(m.clusters[blob0].members == 3000);
  CHECK(m.clusters[1 - blob0].members == 7000);

  double sum = 0.0;
  for (const auto& c : m.clusters) sum += c.probability;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 1; i < m.interval.size(); ++i) CHECK(m.interval[i] > m.interval[i - 1]);
  CHECK(m.cdf_count() == 8);
  CHECK(m.codebook.size() == m.cdf_count());

  const std::vector<int> labels = assign_nearest(reduced, [&] {
    Eigen::MatrixXd c(2, reduced.cols());
    for (int i = 0; i < 2; ++i) c.row(i) = m.clusters[i].mean.transpose();
    return c;
  }());

  for (int ci = 0; ci < 2; ++ci) {
    const Cluster& c = m.clusters[ci];
    CHECK(c.ica_converged);
    CHECK(c.components() == 4);
    CHECK((c.unmixing * c.mixing - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-6);

    const Eigen::MatrixXd members = rows_of(reduced, labels, ci);
    const Eigen::MatrixXd white = (members.rowwise() - c.mean.transpose()) * c.whitening.transpose();
    const Eigen::MatrixXd cov = white.transpose() * white / double(white.rows());
    CHECK((cov - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 5e-2);

    // Exact tables: min/max endpoints reproduce the training extremes.
    const Eigen::MatrixXd src = cluster_sources(c, members);
    for (int j = 0; j < 4; ++j) {
      CHECK(c.cdfs[j].min == doctest::Approx(src.col(j).minCoeff()));
      CHECK(c.cdfs[j].max == doctest::Approx(src.col(j).maxCoeff()));
      const std::vector<double> col(src.col(j).data(), src.col(j).data() + src.rows());
      CHECK(cdf_table(m, c.cdfs[j]) == inverse_cdf_table(col));
    }
  }

  // Sampling: cluster frequencies and per-component marginals.
  CoreModel open = m;
  open.rejection_threshold = -std::numeric_limits<double>::infinity();
  Rng rng(77);
  const int draws = 100000;
  std::vector<int> hits(2, 0);
  std::vector<std::vector<double>> generated(8);
  for (int i = 0; i < draws; ++i) {
    const ReducedSample s = sample_reduced(open, rng);
    ++hits[s.cluster];
    for (int j = 0; j < 4; ++j) generated[s.cluster * 4 + j].push_back(s.sources[j]);
  }
  for (int ci = 0; ci < 2; ++ci) {
    const double p = m.clusters[ci].probability;
    const double sigma = std::sqrt(draws * p * (1 - p));
    CHECK(std::abs(hits[ci] - draws * p) <= 3 * sigma);

    const Eigen::MatrixXd src = cluster_sources(m.clusters[ci], rows_of(reduced, labels, ci));
    for (int j = 0; j < 4; ++j) {
      std::vector<double> gen(generated[ci * 4 + j].begin(), generated[ci * 4 + j].begin() + 10000);
      const std::vector<double> train(src.col(j).data(), src.col(j).data() + src.rows());
      CHECK(test::ks_two_sample(gen, train) <= 0.05);
      // Whitened ICA sources are unit-variance uniforms up to sign.
      const double r = std::sqrt(3.0);
      CHECK(test::ks_one_sample(gen, [r](double x) { return test::uniform_cdf(x, -r, r); }) <= 0.05);
    }
  }
}

TEST_CASE("fit_core vector-quantizes CDF tables") {
  const auto blobs = test::two_blobs(2000, 0.5, 4);
  auto [sdr, reduced] = fit_sdr(blobs.samples, 0.0);
  CoreConfig cfg;
  cfg.clusters = 4;
  cfg.codebook_size = 3;
  cfg.seed = 8;
  const CoreModel m = fit_core(sdr, reduced, cfg);
  CHECK(m.codebook.size() == 3);
  for (int w = 0; w < 3; ++w)
    for (int k = 1; k < kCdfBins; ++k) CHECK(m.codebook.codewords(w, k) >= m.codebook.codewords(w, k - 1));
  for (const auto& c : m.clusters)
    for (const auto& ref : c.cdfs) CHECK((ref.codeword >= 0 && ref.codeword < 3));

  cfg.codebook_size = 500;  // more than F: clamped
  CHECK(fit_core(sdr, reduced, cfg).codebook.size() == m.cdf_count());
}

TEST_CASE("locate_cluster") {
  const std::vector<double> interval{0.0, 0.2, 0.5, 1.0};
  CHECK(locate_cluster(interval, 0.0) == 0);
  CHECK(locate_cluster(interval, 0.19) == 0);
  CHECK(locate_cluster(interval, 0.2) == 1);
  CHECK(locate_cluster(interval, 0.7) == 2);
  CHECK(locate_cluster(interval, 0.999999) == 2);
  const std::vector<double> single{0.0, 1.0};
  CHECK(locate_cluster(single, 0.5) == 0);
}

namespace {

// One cluster, identity maps, linear CDF tables on [lo, hi].
CoreModel linear_model(double threshold) {
  CoreModel m;
  m.sdr.height = 1;
  m.sdr.width = 2;
  SdrModel::Channel ch;
  ch.mean = Eigen::VectorXd::Zero(2);
  ch.basis = Eigen::MatrixXd::Identity(2, 2);
  ch.variances = Eigen::VectorXd::Ones(2);
  m.sdr.channels.push_back(ch);
  Cluster c;
  c.probability = 1.0;
  c.mean = Eigen::VectorXd::Zero(2);
  c.whitening = Eigen::MatrixXd::Identity(2, 2);
  c.unmixing = Eigen::MatrixXd::Identity(2, 2);
  c.mixing = Eigen::MatrixXd::Identity(2, 2);
  c.cdfs = {{0, -1.0, 3.0}, {0, 2.0, 5.0}};
  m.clusters.push_back(c);
  m.codebook.codewords.resize(1, kCdfBins);
  for (int k = 0; k < kCdfBins; ++k) m.codebook.codewords(0, k) = k / 255.0;
  m.interval = {0.0, 1.0};
  m.rejection_threshold = threshold;
  m.core_height = 1;
  m.core_width = 2;
  m.core_channels = 1;
  m.refresh_derived();
  return m;
}

}  // namespace

TEST_CASE("sample_reduced with linear tables gives uniform marginals") {
  const CoreModel m = linear_model(-std::numeric_limits<double>::infinity());
  Rng rng(17);
  std::vector<double> a, b;
  for (int i = 0; i < 20000; ++i) {
    const ReducedSample s = sample_reduced(m, rng);
    CHECK(s.attempts == 1);
    a.push_back(s.z[0]);
    b.push_back(s.z[1]);
  }
  CHECK(test::ks_one_sample(a, [](double x) { return test::uniform_cdf(x, -1.0, 3.0); }) <= 0.02);
  CHECK(test::ks_one_sample(b, [](double x) { return test::uniform_cdf(x, 2.0, 5.0); }) <= 0.02);
}

TEST_CASE("sample_reduced rejection") {
  SUBCASE("threshold above every reachable value fails after the cap") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_reduced(linear_model(10.0), rng), SamplingError);
  }
  SUBCASE("accepted draws have a source above the threshold") {
    const CoreModel m = linear_model(4.5);
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
      const ReducedSample s = sample_reduced(m, rng);
      CHECK(std::max(s.sources[0], s.sources[1]) > 4.5);
    }
  }
}

TEST_CASE("sample_core is deterministic per seed") {
  const auto blobs = test::two_blobs(600, 0.5, 3);
  auto [sdr, reduced] = fit_sdr(blobs.samples, 0.0);
  CoreConfig cfg;
  cfg.clusters = 2;
  cfg.codebook_size = 4;
  const CoreModel m = fit_core(sdr, reduced, cfg);
  CHECK(sample_core(m, 99) == sample_core(m, 99));
  CHECK_FALSE(sample_core(m, 99) == sample_core(m, 100));
  CHECK(sample_core(m, 5).height == 2);
}
