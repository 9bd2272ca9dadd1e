#include <random>

#include "oracles.hpp"
#include "test_util.hpp"
#include "wlr/datagen.hpp"
#include "wlr/metrics.hpp"
#include "wlr/rpca.hpp"

namespace {

using wlr::DenseMatrix;
using wlr::DiagonalWeights;
using wlr::ErrorCode;
using wlr::Index;
using wlr::Vector;

TEST(Rpca, DefaultLambda) {
  EXPECT_DOUBLE_EQ(wlr::default_rpca_lambda(300, 200), std::sqrt(300.0));
}

TEST(Rpca, LowRankWithoutCorruption) {
  std::mt19937_64 gen(1);
  const DenseMatrix d = oracle::random_incoherent(60, 40, 2, gen);
  const auto res = wlr::rpca(d, {});
  ASSERT_TRUE(res.converged);
  EXPECT_LE(res.sparse.cwiseAbs().sum() / d.cwiseAbs().sum(), 1e-3);
  EXPECT_LE(wlr::relative_error(res.low_rank, d), 1e-3);
}

TEST(Rpca, PurelySparseInputWithLargeLambda) {
  DenseMatrix d = DenseMatrix::Zero(30, 20);
  d(3, 4) = 5.0;
  d(10, 1) = -2.0;
  d(25, 19) = 1.0;
  wlr::RpcaConfig cfg;
  cfg.lambda_rpca = 1e3;
  const auto res = wlr::rpca(d, cfg);
  EXPECT_LE(res.low_rank.norm(), 1e-6 * d.norm());
  EXPECT_LE((res.sparse - d).norm(), 1e-6 * d.norm());
}

TEST(Rpca, ExactRecoveryRegime) {
  std::mt19937_64 gen(2);
  const DenseMatrix l0 = oracle::random_incoherent(200, 150, 2, gen) * 10.0;
  const DenseMatrix s0 = wlr::gen_sparse_corruption(200, 150, 0.05, 1.0, 17);
  const auto res = wlr::rpca(l0 + s0, {});
  ASSERT_TRUE(res.converged);
  EXPECT_LE(wlr::relative_error(res.low_rank, l0), 1e-3);
  EXPECT_LE((res.low_rank + res.sparse - l0 - s0).norm() / (l0 + s0).norm(), 1e-7);
}

TEST(Rpca, RejectsNonFinite) {
  DenseMatrix d = DenseMatrix::Ones(3, 3);
  d(0, 0) = std::nan("");
  EXPECT_WLR_ERROR(wlr::rpca(d, {}), ErrorCode::kInvalidInput);
}

TEST(Rpca, ZeroInput) {
  const auto res = wlr::rpca(DenseMatrix::Zero(4, 3), {});
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.low_rank.norm(), 0.0);
}

TEST(WeightedRpca, IdentityWeightsEqualPlainRpca) {
  std::mt19937_64 gen(3);
  const DenseMatrix d = oracle::random_incoherent(50, 30, 2, gen) +
                        wlr::gen_sparse_corruption(50, 30, 0.05, 0.2, 4);
  const auto plain = wlr::rpca(d, {});
  const auto weighted =
      wlr::rpca_with_weights(d, DiagonalWeights::identity(50), DiagonalWeights::identity(30), {});
  EXPECT_EQ(weighted.low_rank, plain.low_rank);
  EXPECT_EQ(weighted.sparse, plain.sparse);

  // Incoherent D: descent finds no violator, so the pipeline is plain RPCA.
  wlr::WeightingConfig wcfg;
  wcfg.accuracy_rho = 3.0;
  ASSERT_LT(oracle::leverage(d, 2).maxCoeff(), 1.0 / 3.0);
  ASSERT_LT(oracle::leverage(d.transpose(), 2).maxCoeff(), 1.0 / 3.0);
  const auto pipeline = wlr::weighted_rpca(d, 2, wlr::RpcaVariant::kType1, wcfg, {});
  EXPECT_EQ(pipeline.row_weights.values, Vector::Ones(50));
  EXPECT_EQ(pipeline.result.low_rank, plain.low_rank);
}

TEST(WeightedRpca, ZeroWeightIsSingular) {
  DiagonalWeights r = DiagonalWeights::identity(4);
  r.values(2) = 0.0;
  EXPECT_WLR_ERROR(wlr::rpca_with_weights(DenseMatrix::Ones(4, 3), r,
                                          DiagonalWeights::identity(3), {}),
                   ErrorCode::kSingularWeight);
}

TEST(WeightedRpca, WeightingPreservesStructure) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({40, 30, 3, 5});
  const DenseMatrix s0 = wlr::gen_sparse_corruption(40, 30, 0.1, 1.0, 6);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  const Vector r = Vector::NullaryExpr(40, [&] { return u(gen); });
  const Vector c = Vector::NullaryExpr(30, [&] { return u(gen); });
  const DenseMatrix rl = wlr::scale_rows_cols(l0, r, c);
  const Vector sv = oracle::singular_values(rl);
  EXPECT_LE(sv(3), 1e-10 * sv(0));
  EXPECT_GT(sv(2), 1e-6 * sv(0));
  const DenseMatrix rs = wlr::scale_rows_cols(s0, r, c);
  EXPECT_EQ((rs.array() != 0.0).count(), (s0.array() != 0.0).count());
  const DenseMatrix back = wlr::scale_rows_cols(rl, r.cwiseInverse(), c.cwiseInverse());
  EXPECT_LE((back - l0).cwiseAbs().maxCoeff(), 1e-12 * l0.cwiseAbs().maxCoeff());
}

TEST(WeightedRpca, RowWeightingLowersCoherenceOfCorruptedInput) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({150, 100, 4, 11});
  const DenseMatrix d = l0 + wlr::gen_sparse_corruption(150, 100, 0.1, 1.0, 12);
  wlr::WeightingConfig wcfg;
  const auto out = wlr::weighted_rpca(d, 4, wlr::RpcaVariant::kType1, wcfg, {}, &l0);
  const auto& trace = out.row_weighting.trace;
  EXPECT_LT(trace.back().coherence, trace.front().coherence);
  EXPECT_TRUE((out.row_weights.values.array() > 0.0).all());
}

TEST(WeightedRpca, TypeTwoReweighsFromTypeOneRecovery) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({60, 40, 2, 13});
  const DenseMatrix d = l0 + wlr::gen_sparse_corruption(60, 40, 0.05, 1.0, 14);
  wlr::WeightingConfig wcfg;
  const auto t1 = wlr::weighted_rpca(d, 2, wlr::RpcaVariant::kType1, wcfg, {});
  const auto t2 = wlr::weighted_rpca(d, 2, wlr::RpcaVariant::kType2, wcfg, {});
  const auto rows = wlr::coordinate_descent(t1.result.low_rank, 2, wcfg);
  EXPECT_EQ(t2.row_weights.values, rows.weights.values);
}

}  // namespace
