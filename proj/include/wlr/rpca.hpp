#pragma once

#include "wlr/linalg.hpp"
#include "wlr/weighting.hpp"

namespace wlr {

/// Settings for  min ||S||_1 + lambda ||L||_*  s.t.  L + S = D.
struct RpcaConfig {
  /// Weight on ||L||_*. 0 selects sqrt(max(n1, n2)), i.e. the usual
  /// 1/sqrt(max(n1, n2)) weight on ||S||_1 once the objective is divided
  /// by lambda.
  double lambda_rpca = 0.0;
  /// Initial augmented-Lagrangian penalty mu; 0 selects 1.25 / ||D||_2.
  double admm_penalty = 0.0;
  /// mu grows by this factor each iteration, capped at max_penalty_ratio * mu_0.
  double penalty_growth = 1.5;
  double max_penalty_ratio = 1e7;
  Index max_iters = 1000;
  double tol = 1e-7;
};

struct RpcaResult {
  DenseMatrix low_rank;
  DenseMatrix sparse;
  Index iterations = 0;
  bool converged = false;
};

enum class RpcaVariant { kType1, kType2 };

double default_rpca_lambda(Index n1, Index n2);

/// Inexact augmented-Lagrangian alternating directions.
RpcaResult rpca(const DenseMatrix& d, const RpcaConfig& cfg = {});

/// Solves RPCA on R D C and maps back: L* = R^-1 L^ C^-1, S* = R^-1 S^ C^-1.
/// Every weight must be strictly positive.
RpcaResult rpca_with_weights(const DenseMatrix& d, const DiagonalWeights& r,
                             const DiagonalWeights& c, const RpcaConfig& cfg = {});

struct WeightedRpcaOutcome {
  RpcaResult result;
  DiagonalWeights row_weights;
  DiagonalWeights col_weights;
  WeightingResult row_weighting;
  WeightingResult col_weighting;
};

/// Weighs D (rows via D, columns via D^T) with coordinate descent on exact
/// rank-k leverage, solves RPCA on R D C and maps back through R^-1, C^-1.
/// Type 2 recomputes the weights from the Type 1 low-rank output and solves
/// once more.
WeightedRpcaOutcome weighted_rpca(const DenseMatrix& d, Index k, RpcaVariant variant,
                                  const WeightingConfig& wcfg, const RpcaConfig& cfg = {},
                                  const DenseMatrix* reference = nullptr);

}  // namespace wlr
