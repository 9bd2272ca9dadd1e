#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "wlr/linalg.hpp"
#include "wlr/metrics.hpp"
#include "wlr/weighting.hpp"

namespace wlr {

struct AdmmConfig {
  double lambda = 1.0;         // nuclear-norm weight
  /// Initial augmented-Lagrangian penalty rho. 0 derives it from lambda so
  /// that the first threshold lambda / rho is 0.1 sigma_1(R P_Omega(M) C).
  double admm_penalty = 0.0;
  /// Residual balancing: rho doubles (halves) when the primal residual
  /// exceeds 10x the dual residual (or vice versa).
  bool adaptive_penalty = false;
  Index max_iters = 500;
  /// Stop when ||RLC - X||_F <= tol * max(||RLC||_F, ||X||_F) and
  /// rho ||R (X - X_prev) C||_F <= tol * max(||R Y C||_F, rho ||RLC||_F).
  double primal_tol = 1e-6;
};

struct RecoveryResult {
  DenseMatrix recovered;
  Index iterations = 0;
  std::vector<double> residual_trace;
  std::vector<double> dual_trace;
  bool converged = false;
  // Final solver state; lets a later solve with the same weights warm start.
  DenseMatrix auxiliary;
  DenseMatrix dual;
  double final_penalty = 0.0;
};

/// [sigma - tau]_+ applied to a singular spectrum.
Vector soft_threshold_singular(const Vector& sigma, double tau);

/// U [Sigma - tau I]_+ V^T. `rank_out` receives the number of kept values.
DenseMatrix singular_value_threshold(const DenseMatrix& z, double tau,
                                     Index* rank_out = nullptr);

/// ADMM for  min 1/2 ||P_Omega(L - M)||_F^2 + lambda ||R L C||_*.
/// L, X, Y start at zero unless `warm` (a previous result with the same
/// weights) is given. Rows/columns with zero weight must be marked abandoned
/// (unless they hold no observations); they are excluded and returned as
/// zeros.
RecoveryResult admm_weighted_complete(const SparseObservation& obs, const DiagonalWeights& r,
                                      const DiagonalWeights& c, const AdmmConfig& cfg,
                                      const RecoveryResult* warm = nullptr);

struct CompletionRound {
  WeightingResult row_weighting;
  WeightingResult col_weighting;
  RecoveryResult recovery;
  double coherence = 0.0;  // row coherence of the recovered matrix's rank-k part
  double l1_loss = 0.0;
  // Filled when a ground truth is supplied: weighted truth R * L0 and L0 * C.
  std::optional<double> truth_row_coherence;
  std::optional<double> truth_col_coherence;
  std::optional<double> truth_row_l1_loss;
  std::optional<double> relative_error;
};

struct CompletionOutcome {
  RecoveryResult result;
  std::vector<CompletionRound> rounds;
};

/// Alternates weighting (rows, then columns via the transpose) and weighted
/// completion. Round 1 weighs the trimmed observation; round s > 1 weighs the
/// previous round's recovery. `per_round` optionally overrides the ADMM
/// config of individual rounds (index s - 1).
CompletionOutcome weighting_completion(const SparseObservation& obs, Index k, Index rounds,
                                       const WeightingConfig& wcfg, const AdmmConfig& acfg,
                                       const DenseMatrix* truth = nullptr,
                                       const std::vector<AdmmConfig>& per_round = {});

/// Continues the loop from an existing recovery for `rounds` more rounds.
CompletionOutcome continue_weighting_completion(const SparseObservation& obs,
                                                const DenseMatrix& previous, Index k,
                                                Index rounds, const WeightingConfig& wcfg,
                                                const AdmmConfig& acfg,
                                                const DenseMatrix* truth = nullptr);

void write_residual_csv(std::ostream& out, const RecoveryResult& r);

}  // namespace wlr
