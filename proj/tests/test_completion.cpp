#include <random>
#include <sstream>

#include "oracles.hpp"
#include "test_util.hpp"
#include "wlr/completion.hpp"
#include "wlr/datagen.hpp"
#include "wlr/experiment.hpp"
#include "wlr/metrics.hpp"

namespace {

using wlr::DenseMatrix;
using wlr::DiagonalWeights;
using wlr::ErrorCode;
using wlr::Index;
using wlr::Vector;

wlr::SparseObservation observe(const DenseMatrix& m, double p, std::uint64_t seed) {
  return wlr::SparseObservation::from_mask(m, wlr::sample_uniform(m.rows(), m.cols(), p, seed));
}

DenseMatrix mask_matrix(const wlr::SparseObservation& obs) {
  DenseMatrix mask = DenseMatrix::Zero(obs.n_rows(), obs.n_cols());
  for (const auto& t : obs.triplets()) mask(t.row, t.col) = 1.0;
  return mask;
}

TEST(Admm, FullyObservedRankOne) {
  const DenseMatrix m = Vector::LinSpaced(8, 1, 3) * Vector::LinSpaced(6, -1, 2).transpose();
  const auto obs = wlr::SparseObservation::full(m);
  wlr::AdmmConfig cfg;
  cfg.lambda = 1e-6 * oracle::singular_values(m)(0);
  const auto res = wlr::admm_weighted_complete(obs, DiagonalWeights::identity(8),
                                               DiagonalWeights::identity(6), cfg);
  EXPECT_LE(wlr::relative_error(res.recovered, m), 1e-3);
  EXPECT_FALSE(res.residual_trace.empty());
  EXPECT_EQ(res.residual_trace.size(), static_cast<std::size_t>(res.iterations));
}

TEST(Admm, IdentityWeightsMatchDirectUnweightedSolver) {
  std::mt19937_64 gen(3);
  const DenseMatrix l0 = oracle::random_incoherent(30, 20, 2, gen);
  const auto obs = observe(l0, 0.5, 9);
  wlr::AdmmConfig cfg;
  cfg.lambda = 0.05;
  cfg.admm_penalty = 0.7;
  cfg.max_iters = 60;
  const auto res = wlr::admm_weighted_complete(obs, DiagonalWeights::identity(30),
                                               DiagonalWeights::identity(20), cfg);
  const auto ref = oracle::unweighted_admm(obs.to_dense(), mask_matrix(obs), cfg.lambda,
                                           cfg.admm_penalty, 60, cfg.primal_tol);
  EXPECT_EQ(res.iterations, ref.iterations);
  EXPECT_LE((res.recovered - ref.l).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Admm, IncoherentSanity) {
  std::mt19937_64 gen(5);
  const DenseMatrix l0 = oracle::random_incoherent(60, 40, 2, gen);
  const auto obs = observe(l0, 0.5, 2);
  const double scale = wlr::lambda_scale(obs, DiagonalWeights::identity(60),
                                         DiagonalWeights::identity(40));
  wlr::AdmmConfig cfg;
  cfg.max_iters = 500;
  const auto sweep = wlr::sweep_lambda(obs, DiagonalWeights::identity(60),
                                       DiagonalWeights::identity(40),
                                       {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}, cfg, &l0);
  EXPECT_GT(scale, 0.0);
  EXPECT_LE(*sweep.lambdas[sweep.best].relative_error, 1e-3);
}

TEST(Admm, WarmStartContinuesTheIteration) {
  std::mt19937_64 gen(6);
  const DenseMatrix l0 = oracle::random_incoherent(20, 15, 2, gen);
  const auto obs = observe(l0, 0.6, 1);
  const auto r = DiagonalWeights::identity(20);
  const auto c = DiagonalWeights::identity(15);
  wlr::AdmmConfig cfg;
  cfg.lambda = 0.01;
  cfg.admm_penalty = 0.5;
  cfg.max_iters = 40;
  cfg.primal_tol = 1e-300;  // run the full budget
  const auto full = wlr::admm_weighted_complete(obs, r, c, cfg);
  cfg.max_iters = 15;
  const auto first = wlr::admm_weighted_complete(obs, r, c, cfg);
  cfg.max_iters = 25;
  const auto second = wlr::admm_weighted_complete(obs, r, c, cfg, &first);
  EXPECT_EQ(second.recovered, full.recovered);
}

TEST(Admm, AbandonedRowsComeBackZero) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({30, 20, 2, 4});
  const auto obs = observe(l0, 0.7, 3);
  DiagonalWeights r = DiagonalWeights::identity(30);
  r.values(5) = 0.0;
  wlr::AdmmConfig cfg;
  cfg.max_iters = 20;
  EXPECT_WLR_ERROR(wlr::admm_weighted_complete(obs, r, DiagonalWeights::identity(20), cfg),
                   ErrorCode::kSingularWeight);
  r.abandoned = {5};
  const auto res = wlr::admm_weighted_complete(obs, r, DiagonalWeights::identity(20), cfg);
  EXPECT_EQ(res.recovered.row(5).cwiseAbs().sum(), 0.0);
  EXPECT_TRUE(res.recovered.allFinite());
}

TEST(Admm, RejectsBadConfig) {
  const auto obs = wlr::SparseObservation::full(DenseMatrix::Ones(3, 3));
  wlr::AdmmConfig cfg;
  cfg.lambda = 0.0;
  EXPECT_WLR_ERROR(wlr::admm_weighted_complete(obs, DiagonalWeights::identity(3),
                                               DiagonalWeights::identity(3), cfg),
                   ErrorCode::kInvalidInput);
}

TEST(Admm, ResidualCsv) {
  wlr::RecoveryResult r;
  r.residual_trace = {0.5, 0.25};
  r.dual_trace = {1.0, 0.125};
  std::ostringstream out;
  wlr::write_residual_csv(out, r);
  EXPECT_EQ(out.str(), "iteration,primal_residual,dual_residual\n1,0.5,1\n2,0.25,0.125\n");
}

TEST(WeightingCompletion, OneRoundIsWeighingThenSolving) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({60, 40, 3, 2});
  const auto obs = observe(l0, 0.5, 5);
  wlr::WeightingConfig wcfg;
  wcfg.seed = 12;
  wlr::AdmmConfig acfg;
  acfg.lambda = 0.01;
  acfg.max_iters = 50;
  const auto out = wlr::weighting_completion(obs, 3, 1, wcfg, acfg, &l0);

  const DenseMatrix trimmed = wlr::trim(obs, wcfg.trim_mode, wcfg.seed).to_dense();
  const auto rows = wlr::coordinate_descent(trimmed, 3, wcfg);
  const auto cols = wlr::coordinate_descent(DenseMatrix(trimmed.transpose()), 3, wcfg);
  const auto direct = wlr::admm_weighted_complete(obs, rows.weights, cols.weights, acfg);
  EXPECT_EQ(out.result.recovered, direct.recovered);
  ASSERT_EQ(out.rounds.size(), 1u);
  EXPECT_TRUE(out.rounds[0].relative_error.has_value());
}

TEST(WeightingCompletion, ContinuationEqualsMoreRounds) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({50, 30, 2, 8});
  const auto obs = observe(l0, 0.5, 6);
  wlr::WeightingConfig wcfg;
  wlr::AdmmConfig acfg;
  acfg.lambda = 0.01;
  acfg.max_iters = 30;
  const auto two = wlr::weighting_completion(obs, 2, 2, wcfg, acfg);
  const auto one = wlr::weighting_completion(obs, 2, 1, wcfg, acfg);
  const auto more =
      wlr::continue_weighting_completion(obs, one.result.recovered, 2, 1, wcfg, acfg);
  EXPECT_EQ(more.result.recovered, two.result.recovered);
}

TEST(Sweep, RoundsMatchManualComposition) {
  const DenseMatrix l0 = wlr::gen_coherent_lowrank({60, 30, 2, 21});
  const auto obs = observe(l0, 0.5, 8);
  wlr::WeightingConfig wcfg;
  wcfg.seed = 4;
  wlr::AdmmConfig acfg;
  acfg.max_iters = 40;
  const std::vector<double> factors{1e-2, 1e-3};
  const auto rounds = wlr::weighted_sweep_rounds(obs, 2, 2, wcfg, factors, acfg, &l0);
  ASSERT_EQ(rounds.size(), 2u);

  const DenseMatrix trimmed = wlr::trim(obs, wcfg.trim_mode, wcfg.seed).to_dense();
  const auto first =
      wlr::weighted_sweep_round(obs, trimmed, 2, true, wcfg, factors, acfg, &l0);
  const auto second = wlr::weighted_sweep_round(obs, first.recovery.recovered, 2, true, wcfg,
                                                factors, acfg, &l0);
  EXPECT_EQ(rounds[1].recovery.recovered, second.recovery.recovered);
  // The best lambda is the one with the smallest error.
  for (const auto& rec : second.lambdas) {
    EXPECT_GE(*rec.relative_error, *second.lambdas[second.best].relative_error);
  }
}

}  // namespace
