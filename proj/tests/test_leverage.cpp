#include <random>

#include "oracles.hpp"
#include "test_util.hpp"
#include "wlr/leverage.hpp"

namespace {

using wlr::DenseMatrix;
using wlr::ErrorCode;
using wlr::Index;
using wlr::Vector;

// Profile of a single unit direction u (k = 1), built by hand.
wlr::LeverageProfile rank_one_profile(const Vector& u) {
  wlr::LeverageProfile p;
  p.rank = 1;
  p.cross = u * u.transpose();
  p.scores = p.cross->diagonal();
  return p;
}

TEST(ComputeLeverage, IdentityEmbedding) {
  const DenseMatrix m = DenseMatrix::Identity(6, 3);
  const auto p = wlr::leverage_of(m, 3);
  EXPECT_LE((p.scores - (Vector(6) << 1, 1, 1, 0, 0, 0).finished()).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(ComputeLeverage, SumsToRankAndCrossIdentity) {
  std::mt19937_64 gen(4);
  const DenseMatrix a = oracle::random_low_rank(12, 8, 3, gen);
  const auto p = wlr::leverage_of(a, 3, true);
  EXPECT_NEAR(p.scores.sum(), 3.0, 1e-10);
  // mu_i = sum_j mu_ij^2, with the Gram block computed independently.
  const DenseMatrix cross = oracle::cross(a, 3);
  for (Index i = 0; i < 12; ++i) {
    EXPECT_NEAR(p.scores(i), cross.row(i).squaredNorm(), 1e-10);
    EXPECT_NEAR(p.scores(i), p.cross->row(i).squaredNorm(), 1e-10);
  }
  EXPECT_LE((*p.cross - cross).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ComputeLeverage, RejectsRankAboveFactors) {
  std::mt19937_64 gen(4);
  const auto f = wlr::truncated_svd(oracle::random_low_rank(6, 5, 2, gen), 2);
  EXPECT_WLR_ERROR(wlr::compute_leverage(f, 3), ErrorCode::kInvalidRank);
}

TEST(Trim, BelowThresholdIsUnchanged) {
  const wlr::SparseObservation obs(3, 3, {{0, 0, 1}, {1, 1, 2}, {2, 2, 3}});
  EXPECT_EQ(wlr::trim(obs, wlr::TrimMode::kZeroOut), obs);
  EXPECT_EQ(wlr::trim(obs, wlr::TrimMode::kSubsample, 7), obs);
}

// n1 = 10: row 0 holds 90% of the entries (45 of 50).
wlr::SparseObservation heavy_row() {
  std::vector<wlr::Triplet> t;
  for (Index j = 0; j < 45; ++j) t.push_back({0, j, 1.0});
  for (Index i = 1; i < 6; ++i) t.push_back({i, i, 1.0});
  return {10, 50, t};
}

TEST(Trim, ZeroOutEmptiesHeavyRow) {
  const auto trimmed = wlr::trim(heavy_row(), wlr::TrimMode::kZeroOut);
  EXPECT_EQ(trimmed.row_degrees()[0], 0);
  EXPECT_EQ(trimmed.size(), 5u);
}

TEST(Trim, SubsampleKeepsFloorOfAverage) {
  const auto trimmed = wlr::trim(heavy_row(), wlr::TrimMode::kSubsample, 3);
  EXPECT_EQ(trimmed.row_degrees()[0], 50 / 10);
  EXPECT_EQ(wlr::trim(heavy_row(), wlr::TrimMode::kSubsample, 3), trimmed);
}

TEST(EstimateLeverage, FullObservationIsExact) {
  std::mt19937_64 gen(6);
  const DenseMatrix a = oracle::random_coherent(30, 20, 3, gen);
  wlr::EstimationParams params;
  params.target_rank = 3;
  const auto p = wlr::estimate_leverage(wlr::SparseObservation::full(a), params);
  EXPECT_LE((p.scores - oracle::leverage(a, 3)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(EstimateLeverage, EmptyObservationIsDegenerate) {
  wlr::EstimationParams params;
  EXPECT_WLR_ERROR(wlr::estimate_leverage(wlr::SparseObservation(4, 4, {}), params),
                   ErrorCode::kDegenerateObservation);
}

TEST(RankOneUpdate, Substitution) {
  const auto p = rank_one_profile((Vector(2) << std::sqrt(0.8), std::sqrt(0.2)).finished());
  const auto q = wlr::rank_one_update(p, 0, 0.5);
  EXPECT_NEAR(q.scores(0), 0.4 / 0.6, 1e-15);
  EXPECT_NEAR(q.scores.sum(), 1.0, 1e-15);
}

TEST(RankOneUpdate, TinyStepLeavesProfile) {
  std::mt19937_64 gen(2);
  const auto p = wlr::leverage_of(oracle::random_low_rank(8, 6, 2, gen), 2, true);
  const auto q = wlr::rank_one_update(p, 3, 1e-15);
  EXPECT_LE((*q.cross - *p.cross).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(RankOneUpdate, MatchesSvdOfWeightedMatrix) {
  std::mt19937_64 gen(10);
  const DenseMatrix m = oracle::random_low_rank(10, 6, 3, gen);
  const auto p = wlr::leverage_of(m, 3, true);
  const double gamma = 0.3;
  const auto q = wlr::rank_one_update(p, 2, gamma);
  DenseMatrix wm = m;
  wm.row(2) *= std::sqrt(1.0 - gamma);
  EXPECT_LE((*q.cross - oracle::cross(wm, 3)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((q.scores - oracle::leverage(wm, 3)).cwiseAbs().maxCoeff(), 1e-8);
  // Row i goes down, every other row goes up, the sum is kept.
  EXPECT_LE(q.scores(2), p.scores(2));
  for (Index j = 0; j < 10; ++j) {
    if (j != 2) EXPECT_GE(q.scores(j), p.scores(j) - 1e-15);
  }
  EXPECT_NEAR(q.scores.sum(), p.scores.sum(), 1e-10);
}

TEST(RankOneUpdate, Errors) {
  std::mt19937_64 gen(2);
  auto p = wlr::leverage_of(oracle::random_low_rank(8, 6, 2, gen), 2, true);
  EXPECT_WLR_ERROR(wlr::rank_one_update(p, 0, 0.0), ErrorCode::kInvalidStep);
  EXPECT_WLR_ERROR(wlr::rank_one_update(p, 0, 1.0), ErrorCode::kInvalidStep);
  p.cross.reset();
  EXPECT_WLR_ERROR(wlr::rank_one_update(p, 0, 0.5), ErrorCode::kNeedsCross);
}

TEST(ReduceToBases, SameLeverageUnderRowWeights) {
  std::mt19937_64 gen(12);
  const DenseMatrix a = oracle::random_low_rank(30, 20, 6, gen);
  const auto f = wlr::condensed_svd(a);
  const DenseMatrix u = wlr::reduce_to_bases(f);
  EXPECT_EQ(u.cols(), 6);
  std::uniform_real_distribution<double> w(0.05, 1.0);
  const Vector r = Vector::NullaryExpr(30, [&] { return w(gen); });
  // Full-rank leverage agrees for R A and R U.
  EXPECT_LE((oracle::leverage(r.asDiagonal() * a, 6) - oracle::leverage(r.asDiagonal() * u, 6))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
  // Rank-k leverage needs the singular values kept.
  const DenseMatrix us = wlr::reduce_to_scaled_bases(f);
  EXPECT_LE((oracle::leverage(r.asDiagonal() * a, 3) - oracle::leverage(r.asDiagonal() * us, 3))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
}

TEST(ReduceToBases, OrthonormalInputKeepsProfile) {
  const DenseMatrix q = DenseMatrix::Identity(5, 2);
  const DenseMatrix u = wlr::reduce_to_bases(wlr::condensed_svd(q));
  EXPECT_LE((oracle::leverage(u, 2) - oracle::leverage(q, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
