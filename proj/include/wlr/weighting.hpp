#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "wlr/leverage.hpp"
#include "wlr/linalg.hpp"

namespace wlr {

/// Desired leverage scores mu_i*. Rows with a negative target are abandoned:
/// their weight is fixed at zero and they are skipped by the loss.
struct TargetScores {
  Vector values;
  std::vector<Index> abandoned;

  Index size() const { return values.size(); }
  /// 1 for rows that participate in the loss, 0 for abandoned rows.
  std::vector<std::uint8_t> active_mask() const;
};

/// Diagonal of a row (or column) weight matrix. Every entry starts at 1 and is
/// only ever multiplied by sqrt(1 - gamma), gamma in (0, 1); abandoned entries
/// are exactly 0.
struct DiagonalWeights {
  Vector values;
  std::vector<Index> abandoned;

  static DiagonalWeights identity(Index n);
  Index size() const { return values.size(); }
  /// Multiplies entry i by sqrt(1 - gamma).
  void scale(Index i, double gamma);
  bool is_abandoned(Index i) const;
};

enum class LossNorm { kL1, kL2, kInf };

struct WeightingConfig {
  double accuracy_rho = 20.0;
  /// 0 means k^2.
  Index max_steps = 0;
  LossNorm loss_q = LossNorm::kL1;
  Index refresh_period = 50;
  TrimMode trim_mode = TrimMode::kSubsample;
  std::uint64_t seed = 0;
  /// Line-search resolution for the l2 / l_inf step sizes.
  Index grid = 100;
};

/// One row of the weighting trace (step 0 is the unweighted start).
struct WeightingStep {
  Index step = 0;
  Index chosen_row = -1;
  double gamma = 0.0;
  double coherence = 0.0;
  double l1_loss = 0.0;
  double kappa = 0.0;
};

struct WeightingResult {
  DiagonalWeights weights;
  std::vector<WeightingStep> trace;
  Index steps_taken = 0;
};

TargetScores target_scores_uniform(Index n1, Index k);
TargetScores target_scores_from_marginals(const Vector& row_marginals, Index k);

/// (sum_i max(mu_i - mu_i*, 0)^q)^(1/q) over non-abandoned rows; max for q = inf.
double hinge_loss(const LeverageProfile& p, const TargetScores& t, LossNorm q);
double hinge_loss(const Vector& scores, const TargetScores& t, LossNorm q);

/// gamma that moves mu_i exactly to mu_target: (1 - mu'/mu) / (1 - mu').
double gamma_exact(double mu_i, double mu_target);
/// Medium-scale rule: (n1 - 2k / mu_hat) / (n1 - 2k), floored at 0.
double gamma_medium(double mu_hat, Index n1, Index k);
/// Large-scale rule: (rho - 1 / (mu_hat - 1/(2 rho))) / (rho - 1).
double gamma_large(double mu_hat, double accuracy_rho);
/// Upper end of the post-step leverage interval of the medium-scale rule:
/// 4k/n1 * (rho - 1/2)^2 / ((rho - 1)^2 - 4k/n1 * rho * (rho - 1/2)).
double medium_step_upper_bound(Index n1, Index k, double accuracy_rho);

/// Step size for row i: closed form for l1; best gamma on {1/grid, ...,
/// (grid-1)/grid} for l2 / l_inf (0 when nothing strictly improves the loss).
double line_search_step(const LeverageProfile& p, Index i, LossNorm q, const TargetScores& t,
                        Index grid = 100);

/// Coordinate descent on estimated leverage scores. Each step recomputes the
/// rank-k leverage of R * M~, picks the largest violator with mu_hat >= 1/rho
/// (ties to the smallest index), applies the medium or large step rule and
/// scales that row. Sparse inputs are trimmed first.
///
/// When `reference` is given, the trace reports coherence, l1 loss and kappa
/// of R * reference (the ground truth); otherwise of the estimate itself.
WeightingResult coordinate_descent(const DenseMatrix& observed, Index k,
                                   const WeightingConfig& cfg, const TargetScores& targets,
                                   const DenseMatrix* reference = nullptr);
WeightingResult coordinate_descent(const SparseObservation& obs, Index k,
                                   const WeightingConfig& cfg, const TargetScores& targets,
                                   const DenseMatrix* reference = nullptr);
/// Uniform targets k/n1.
WeightingResult coordinate_descent(const DenseMatrix& observed, Index k,
                                   const WeightingConfig& cfg,
                                   const DenseMatrix* reference = nullptr);
WeightingResult coordinate_descent(const SparseObservation& obs, Index k,
                                   const WeightingConfig& cfg,
                                   const DenseMatrix* reference = nullptr);

/// Coordinate descent with exact leverage scores, chaining closed-form
/// rank-one updates and refreshing from a fresh SVD every refresh_period
/// updates. The step size follows cfg.loss_q via line_search_step.
struct ExactStep {
  Index row = -1;
  double gamma = 0.0;
  LeverageProfile before;
  LeverageProfile after;
};

struct ExactDescentResult {
  DiagonalWeights weights;
  std::vector<ExactStep> steps;
  /// Loss values per step for every norm: [step][0=l1, 1=l2, 2=inf].
  std::vector<std::array<double, 3>> losses;
  bool stuck = false;
};

ExactDescentResult exact_coordinate_descent(const DenseMatrix& m, Index k,
                                            const WeightingConfig& cfg,
                                            const TargetScores& targets,
                                            bool keep_profiles = false);

void write_weights_csv(std::ostream& out, const DiagonalWeights& w);
void write_trace_csv(std::ostream& out, const std::vector<WeightingStep>& trace);

}  // namespace wlr
