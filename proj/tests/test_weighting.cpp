#include <random>
#include <sstream>

#include "oracles.hpp"
#include "test_util.hpp"
#include "wlr/datagen.hpp"
#include "wlr/metrics.hpp"
#include "wlr/weighting.hpp"

namespace {

using wlr::DenseMatrix;
using wlr::ErrorCode;
using wlr::Index;
using wlr::LossNorm;
using wlr::Vector;

// Rows 0 and 1 mirror each other under a sign flip of the second column, so
// they share the largest leverage; the other rows sit below k/n1 = 1/3.
DenseMatrix two_equal_max_rows() {
  DenseMatrix m(6, 2);
  m << 3, 1, 3, -1, 1, 0.5, 1, -0.5, 0.5, 1, 0.5, -1;
  return m;
}

TEST(TargetScores, Uniform) {
  EXPECT_EQ(wlr::target_scores_uniform(100, 5).values, Vector::Constant(100, 0.05));
  EXPECT_EQ(wlr::target_scores_uniform(4, 4).values, Vector::Ones(4));
  EXPECT_EQ(wlr::target_scores_uniform(1000, 20).values, Vector::Constant(1000, 0.02));
  EXPECT_WLR_ERROR(wlr::target_scores_uniform(3, 4), ErrorCode::kInvalidDims);
}

TEST(TargetScores, FromMarginals) {
  const auto uniform = wlr::target_scores_from_marginals(Vector::Constant(10, 0.3), 2);
  EXPECT_LE((uniform.values - Vector::Constant(10, 0.2)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(uniform.abandoned.empty());

  // Row 0 at twice the average: 2k * 2/n1 - k/n1 = 3k/n1.
  Vector m = Vector::Ones(10);
  m(0) = 2.0;
  m(1) = 0.0;
  const auto t = wlr::target_scores_from_marginals(m, 2);
  ASSERT_EQ(m.mean(), 1.0);
  EXPECT_NEAR(t.values(0), 3.0 * 2 / 10, 1e-15);
  EXPECT_EQ(t.abandoned, std::vector<Index>{1});

  // Below half the average is abandoned.
  Vector half = Vector::Ones(4);
  half(3) = 0.4;  // average 0.85, half of it 0.425
  EXPECT_EQ(wlr::target_scores_from_marginals(half, 1).abandoned, std::vector<Index>{3});

  EXPECT_WLR_ERROR(wlr::target_scores_from_marginals(Vector::Zero(3), 1),
                   ErrorCode::kInvalidMarginals);
}

TEST(HingeLoss, Examples) {
  const Vector mu = (Vector(3) << 0.6, 0.2, 0.2).finished();
  const wlr::TargetScores t{Vector::Constant(3, 1.0 / 3.0), {}};
  EXPECT_NEAR(wlr::hinge_loss(mu, t, LossNorm::kL1), 0.26667, 1e-5);
  EXPECT_NEAR(wlr::hinge_loss(mu, t, LossNorm::kInf), 0.26667, 1e-5);
  EXPECT_NEAR(wlr::hinge_loss(mu, t, LossNorm::kL2), 0.6 - 1.0 / 3.0, 1e-15);
  EXPECT_EQ(wlr::hinge_loss(t.values, t, LossNorm::kL1), 0.0);

  // Abandoned rows are skipped.
  const wlr::TargetScores skip{Vector::Constant(3, 1.0 / 3.0), {0}};
  EXPECT_EQ(wlr::hinge_loss(mu, skip, LossNorm::kL1), 0.0);
}

TEST(StepRules, Substitution) {
  EXPECT_NEAR(wlr::gamma_exact(0.5, 0.25), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(wlr::gamma_exact(0.4, 0.4), 0.0);
  EXPECT_WLR_ERROR(wlr::gamma_exact(0.2, 0.3), ErrorCode::kInvalidLeverage);

  EXPECT_NEAR(wlr::gamma_medium(0.5, 1000, 20), 920.0 / 960.0, 1e-15);
  EXPECT_NEAR(wlr::gamma_medium(40.0 / 1000.0, 1000, 20), 0.0, 1e-15);
  EXPECT_WLR_ERROR(wlr::gamma_medium(0.5, 40, 20), ErrorCode::kInvalidDims);

  EXPECT_NEAR(wlr::gamma_large(0.99, 20.0), (20.0 - 1.0 / 0.965) / 19.0, 1e-14);
  // Boundary mu_hat - 1/(2 rho) = 1/rho gives gamma = 0 (rho = 2, mu_hat = 0.75).
  EXPECT_NEAR(wlr::gamma_large(0.75, 2.0), 0.0, 1e-15);
  EXPECT_WLR_ERROR(wlr::gamma_large(0.5, 20.0), ErrorCode::kInvalidLeverage);
}

TEST(StepRules, GammaExactRoundTripOnSvd) {
  std::mt19937_64 gen(14);
  const DenseMatrix m = oracle::random_low_rank(15, 9, 3, gen);
  const Vector mu = oracle::leverage(m, 3);
  Index i = 0;
  mu.maxCoeff(&i);
  const double gamma = wlr::gamma_exact(mu(i), 0.1);
  DenseMatrix wm = m;
  wm.row(i) *= std::sqrt(1.0 - gamma);
  EXPECT_NEAR(oracle::leverage(wm, 3)(i), 0.1, 1e-8);
  const auto p = wlr::rank_one_update(wlr::leverage_of(m, 3, true), i, gamma);
  EXPECT_NEAR(p.scores(i), 0.1, 1e-10);
}

TEST(StepRules, MediumUpperBound) {
  // 4k/n1 (rho - 1/2)^2 / ((rho - 1)^2 - 4k/n1 rho (rho - 1/2))
  const double r = 4.0 * 4 / 300.0;
  EXPECT_NEAR(wlr::medium_step_upper_bound(300, 4, 10.0),
              r * 9.5 * 9.5 / (81.0 - r * 10.0 * 9.5), 1e-15);
}

TEST(StepRules, MediumLandsInsideInterval) {
  std::mt19937_64 gen(30);
  DenseMatrix m = oracle::random_low_rank(300, 100, 4, gen);
  m.row(0) *= 10.0;
  const Vector mu = oracle::leverage(m, 4);
  Index i = 0;
  mu.maxCoeff(&i);
  ASSERT_GT(mu(i), 0.1);
  ASSERT_LT(mu(i), 0.9);
  DenseMatrix wm = m;
  wm.row(i) *= std::sqrt(1.0 - wlr::gamma_medium(mu(i), 300, 4));
  const double after = oracle::leverage(wm, 4)(i);
  EXPECT_GT(after, 4.0 / 300.0);
  EXPECT_LT(after, 4.2 * 4.0 / 300.0);
}

TEST(LineSearch, ClosedFormForL1) {
  const Vector u = (Vector(2) << std::sqrt(0.5), std::sqrt(0.5)).finished();
  wlr::LeverageProfile p;
  p.rank = 1;
  p.cross = u * u.transpose();
  p.scores = p.cross->diagonal();
  const wlr::TargetScores t{Vector::Constant(2, 0.25), {}};
  EXPECT_NEAR(wlr::line_search_step(p, 0, LossNorm::kL1, t), 2.0 / 3.0, 1e-15);
  p.cross.reset();
  EXPECT_WLR_ERROR(wlr::line_search_step(p, 0, LossNorm::kL1, t), ErrorCode::kNeedsCross);
}

TEST(LineSearch, TwoEqualMaxRowsStickInfinityNorm) {
  const DenseMatrix m = two_equal_max_rows();
  const auto p = wlr::leverage_of(m, 2, true);
  const auto t = wlr::target_scores_uniform(6, 2);
  ASSERT_NEAR(p.scores(0), p.scores(1), 1e-12);
  ASSERT_GT(p.scores(0), 1.0 / 3.0);
  for (Index i = 2; i < 6; ++i) ASSERT_LT(p.scores(i), 1.0 / 3.0);
  for (Index i = 0; i < 6; ++i) EXPECT_EQ(wlr::line_search_step(p, i, LossNorm::kInf, t), 0.0);

  const double gamma = wlr::line_search_step(p, 0, LossNorm::kL1, t);
  EXPECT_GT(gamma, 0.0);
  const auto q = wlr::rank_one_update(p, 0, gamma);
  EXPECT_LT(wlr::hinge_loss(q, t, LossNorm::kL1), wlr::hinge_loss(p, t, LossNorm::kL1));
}

TEST(LineSearch, CorollaryTwoMonotoneDecrement) {
  std::mt19937_64 gen(44);
  const DenseMatrix m = oracle::random_coherent(20, 10, 3, gen);
  const auto p = wlr::leverage_of(m, 3, true);
  const auto t = wlr::target_scores_uniform(20, 3);
  Index i = 0;
  p.scores.maxCoeff(&i);
  const double cap = wlr::gamma_exact(p.scores(i), t.values(i));
  const double base = wlr::hinge_loss(p, t, LossNorm::kL1);
  double previous = 0.0;
  for (int g = 1; g <= 50; ++g) {
    const double gamma = cap * g / 50.0;
    const double dec = base - wlr::hinge_loss(wlr::rank_one_update(p, i, gamma), t, LossNorm::kL1);
    EXPECT_GE(dec, previous - 1e-12);
    previous = dec;
  }
}

TEST(CoordinateDescent, IncoherentInputKeepsIdentity) {
  std::mt19937_64 gen(1);
  const DenseMatrix m = oracle::random_incoherent(80, 60, 2, gen);
  wlr::WeightingConfig cfg;
  cfg.accuracy_rho = 4.0;  // threshold 1/4; every row is far below
  ASSERT_LT(oracle::leverage(m, 2).maxCoeff(), 0.25);
  const auto res = wlr::coordinate_descent(m, 2, cfg);
  EXPECT_EQ(res.steps_taken, 0);
  EXPECT_EQ(res.weights.values, Vector::Ones(80));
  ASSERT_EQ(res.trace.size(), 1u);
}

TEST(CoordinateDescent, DominantRowRankOne) {
  Vector u = Vector::Ones(30);
  u(4) = 40.0;
  const DenseMatrix m = u * Vector::LinSpaced(10, 1, 2).transpose();
  wlr::WeightingConfig cfg;
  const auto res = wlr::coordinate_descent(m, 1, cfg);
  ASSERT_GT(res.steps_taken, 0);
  EXPECT_EQ(res.trace[1].chosen_row, 4);
  const DenseMatrix weighted = res.weights.values.asDiagonal() * m;
  EXPECT_LT(oracle::coherence(weighted, 1), oracle::coherence(m, 1));
}

TEST(CoordinateDescent, TraceAndWeightInvariants) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({120, 60, 4, 3});
  wlr::WeightingConfig cfg;
  const auto res = wlr::coordinate_descent(l0, 4, cfg, &l0);
  ASSERT_EQ(res.trace.size(), static_cast<std::size_t>(res.steps_taken + 1));
  EXPECT_LE(res.steps_taken, 16);
  EXPECT_TRUE((res.weights.values.array() > 0.0).all());
  EXPECT_TRUE((res.weights.values.array() <= 1.0).all());
  // Replaying the trace reproduces the weights, one factor per step.
  Vector replay = Vector::Ones(120);
  for (std::size_t s = 1; s < res.trace.size(); ++s) {
    replay(res.trace[s].chosen_row) *= std::sqrt(1.0 - res.trace[s].gamma);
  }
  EXPECT_EQ(replay, res.weights.values);
  EXPECT_LT(res.trace.back().l1_loss, res.trace.front().l1_loss);
  // Trace coherence is the weighted ground truth's.
  EXPECT_NEAR(res.trace.back().coherence,
              oracle::coherence(res.weights.values.asDiagonal() * l0, 4), 1e-8);
}

TEST(CoordinateDescent, SparseInputIsTrimmedThenWeighed) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({100, 50, 3, 9});
  const auto obs = wlr::SparseObservation::from_mask(l0, wlr::sample_uniform(100, 50, 0.5, 4));
  wlr::WeightingConfig cfg;
  cfg.seed = 77;
  const auto a = wlr::coordinate_descent(obs, 3, cfg);
  const auto b = wlr::coordinate_descent(wlr::trim(obs, cfg.trim_mode, 77).to_dense(), 3, cfg);
  EXPECT_EQ(a.weights.values, b.weights.values);
}

TEST(CoordinateDescent, AbandonedRowsGetZeroWeight) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({40, 30, 2, 5});
  Vector marg = Vector::Ones(40);
  marg(3) = 0.1;
  const auto t = wlr::target_scores_from_marginals(marg, 2);
  wlr::WeightingConfig cfg;
  const auto res = wlr::coordinate_descent(l0, 2, cfg, t);
  EXPECT_EQ(res.weights.values(3), 0.0);
  EXPECT_EQ(res.weights.abandoned, std::vector<Index>{3});
}

TEST(ExactDescent, StepsChainToFreshProfiles) {
  std::mt19937_64 gen(8);
  const DenseMatrix m = oracle::random_coherent(40, 20, 3, gen);
  wlr::WeightingConfig cfg;
  cfg.refresh_period = 1000;  // no refresh: every profile is chained
  const auto res =
      wlr::exact_coordinate_descent(m, 3, cfg, wlr::target_scores_uniform(40, 3), true);
  ASSERT_FALSE(res.steps.empty());
  const DenseMatrix weighted = res.weights.values.asDiagonal() * m;
  EXPECT_LE((res.steps.back().after.scores - oracle::leverage(weighted, 3)).cwiseAbs().maxCoeff(),
            1e-8);
  for (std::size_t s = 1; s < res.losses.size(); ++s) {
    EXPECT_LE(res.losses[s][0], res.losses[s - 1][0] + 1e-12);
  }
}

TEST(WeightsCsv, Format) {
  wlr::DiagonalWeights w = wlr::DiagonalWeights::identity(2);
  w.scale(1, 0.75);
  std::ostringstream out;
  wlr::write_weights_csv(out, w);
  EXPECT_EQ(out.str(), "index,weight\n0,1\n1,0.5\n");
  EXPECT_WLR_ERROR(w.scale(0, 1.0), ErrorCode::kInvalidStep);
}

}  // namespace
