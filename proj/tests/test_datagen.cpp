#include <cmath>

#include "oracles.hpp"
#include "test_util.hpp"
#include "wlr/datagen.hpp"
#include "wlr/random.hpp"

namespace {

using wlr::DenseMatrix;
using wlr::ErrorCode;
using wlr::Index;

TEST(Random, DeterministicAndInRange) {
  wlr::Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(a.uniform_index(7), 7u);
    b.uniform_index(7);
  }
  EXPECT_NE(wlr::derive_seed(1, 1), wlr::derive_seed(1, 2));
  EXPECT_NE(wlr::derive_seed(1, 1), wlr::derive_seed(2, 1));
}

TEST(Random, NormalMoments) {
  wlr::Rng rng(7);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Datagen, CovarianceEntries) {
  const DenseMatrix cov = wlr::t_covariance({10, 10, 4, 0});
  EXPECT_EQ(cov(0, 0), 2.0);
  EXPECT_EQ(cov(0, 1), 1.0);
  EXPECT_EQ(cov(0, 2), 0.5);
  EXPECT_EQ(cov(3, 1), 0.5);
}

TEST(Datagen, ValidatesSpec) {
  EXPECT_WLR_ERROR(wlr::validate({10, 5, 6, 0}), ErrorCode::kInvalidRank);
  EXPECT_WLR_ERROR(wlr::validate({10, 5, 2, 0, 2, 2.0, 1.0}), ErrorCode::kInvalidInput);
}

TEST(Datagen, ExactRankAndDeterminism) {
  const wlr::GenSpec spec{80, 50, 5, 9};
  const DenseMatrix l0 = wlr::gen_coherent_lowrank(spec);
  const auto sv = oracle::singular_values(l0);
  EXPECT_LE(sv(5), 1e-10 * sv(0));
  EXPECT_GT(sv(4), 1e-8 * sv(0));
  EXPECT_EQ(wlr::gen_coherent_lowrank(spec), l0);
  EXPECT_NE(wlr::gen_coherent_lowrank({80, 50, 5, 10}), l0);
}

TEST(Datagen, MatchesRatioConstruction) {
  // Rebuild L0 = U V^T from the documented streams: z = chol(Lambda) n,
  // row = z sqrt(nu / w) with w chi-square(nu).
  const wlr::GenSpec spec{6, 4, 3, 5};
  const DenseMatrix chol = wlr::t_covariance(spec).llt().matrixL();
  auto rows = [&](Index n, std::uint64_t stream) {
    wlr::Rng rng(wlr::derive_seed(spec.seed, stream));
    DenseMatrix out(n, spec.k);
    for (Index i = 0; i < n; ++i) {
      Eigen::VectorXd z(spec.k);
      for (Index a = 0; a < spec.k; ++a) z(a) = rng.normal();
      const double w = rng.chi_square(spec.t_dof);
      out.row(i) = (chol * z).transpose() * std::sqrt(spec.t_dof / w);
    }
    return out;
  };
  const DenseMatrix expected = rows(6, 1) * rows(4, 2).transpose();
  EXPECT_LE((wlr::gen_coherent_lowrank(spec) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Datagen, CoherenceAboveOne) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({400, 200, 8, 1});
  const double mu = oracle::coherence(l0, 8);
  EXPECT_GT(mu, 2.0);
  EXPECT_LE(mu, 400.0 / 8.0 + 1e-9);
}

TEST(Datagen, SampleUniform) {
  const auto full = wlr::sample_uniform(5, 4, 1.0, 3);
  EXPECT_EQ(std::count(full.begin(), full.end(), 1), 20);
  EXPECT_WLR_ERROR(wlr::sample_uniform(5, 4, 0.0, 3), ErrorCode::kInvalidInput);
  // p = 0.1 on 400 x 200: |Omega| within 4 sd of 8000.
  const double sd = std::sqrt(80000 * 0.1 * 0.9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto mask = wlr::sample_uniform(400, 200, 0.1, seed);
    const double count = static_cast<double>(std::count(mask.begin(), mask.end(), 1));
    EXPECT_LE(std::abs(count - 8000.0), 4 * sd);
  }
}

TEST(Datagen, GaussianNoise) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({40, 30, 2, 1});
  EXPECT_EQ(wlr::add_gaussian_noise(l0, 0.5, 0.0, 0.0, 4), l0);
  EXPECT_EQ(wlr::add_gaussian_noise(l0, 0.0, 1.0, 1.0, 4), l0);
  const DenseMatrix m = wlr::add_gaussian_noise(l0, 0.5, 1.0, 1.0, 4);
  EXPECT_EQ(((m - l0).array() != 0.0).count(), 600);
  EXPECT_EQ(wlr::add_gaussian_noise(l0, 0.5, 1.0, 1.0, 4), m);
  // Noise mean is 1 over the changed entries.
  const double mean = (m - l0).sum() / 600.0;
  EXPECT_NEAR(mean, 1.0, 4.0 / std::sqrt(600.0));
}

TEST(Datagen, SparseCorruption) {
  EXPECT_EQ(wlr::gen_sparse_corruption(10, 10, 0.0, 1.0, 1), DenseMatrix::Zero(10, 10));
  const DenseMatrix all = wlr::gen_sparse_corruption(10, 10, 1.0, 2.0, 1);
  EXPECT_EQ((all.array().abs() == 2.0).count(), 100);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DenseMatrix s0 = wlr::gen_sparse_corruption(300, 200, 0.1, 3.0, seed);
    const double nnz = static_cast<double>((s0.array() != 0.0).count());
    EXPECT_LE(std::abs(nnz - 6000.0), 4 * std::sqrt(60000 * 0.1 * 0.9));
    const double pos = static_cast<double>((s0.array() > 0.0).count());
    EXPECT_LE(std::abs(pos - nnz / 2), 4 * std::sqrt(nnz / 4));
    EXPECT_EQ(s0.cwiseAbs().maxCoeff(), 3.0);
  }
}

}  // namespace
