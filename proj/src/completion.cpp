#include "wlr/completion.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <string>

#include "wlr/error.hpp"
#include "wlr/simd/kernels.hpp"

namespace wlr {

double relative_error(const DenseMatrix& recovered, const DenseMatrix& reference) {
  if (recovered.rows() != reference.rows() || recovered.cols() != reference.cols()) {
    fail(ErrorCode::kInvalidInput, "relative_error: shape mismatch");
  }
  const double denom = reference.norm();
  if (!(denom > 0.0)) fail(ErrorCode::kUndefinedReference, "reference matrix is zero");
  return (recovered - reference).norm() / denom;
}

double coherence(const LeverageProfile& p, Index n) {
  if (p.rank < 1) fail(ErrorCode::kInvalidRank, "coherence needs rank >= 1");
  return static_cast<double>(n) / static_cast<double>(p.rank) * p.max_score();
}

Vector soft_threshold_singular(const Vector& sigma, double tau) {
  return (sigma.array() - tau).cwiseMax(0.0).matrix();
}

DenseMatrix singular_value_threshold(const DenseMatrix& z, double tau, Index* rank_out) {
  Eigen::BDCSVD<DenseMatrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  Index kept = 0;
  while (kept < sigma.size() && sigma(kept) > tau) ++kept;
  if (rank_out != nullptr) *rank_out = kept;
  if (kept == 0) return DenseMatrix::Zero(z.rows(), z.cols());
  const Vector shrunk = soft_threshold_singular(sigma.head(kept), tau);
  return svd.matrixU().leftCols(kept) * shrunk.asDiagonal() *
         svd.matrixV().leftCols(kept).transpose();
}

namespace {

constexpr double kAutoThresholdFraction = 0.1;

void check_weights(const DiagonalWeights& w, const std::vector<Index>& degrees,
                   const char* what) {
  if (w.size() != static_cast<Index>(degrees.size())) {
    fail(ErrorCode::kInvalidInput, std::string(what) + " weights length mismatch");
  }
  for (Index i = 0; i < w.size(); ++i) {
    const double v = w.values(i);
    if (!std::isfinite(v) || v < 0.0) {
      fail(ErrorCode::kInvalidInput, std::string(what) + " weights must be finite and >= 0");
    }
    if (v == 0.0 && degrees[static_cast<std::size_t>(i)] > 0 && !w.is_abandoned(i)) {
      fail(ErrorCode::kSingularWeight, std::string(what) + " " + std::to_string(i) +
                                           " has zero weight but holds observations");
    }
  }
}

}  // namespace

RecoveryResult admm_weighted_complete(const SparseObservation& obs, const DiagonalWeights& r,
                                      const DiagonalWeights& c, const AdmmConfig& cfg,
                                      const RecoveryResult* warm) {
  if (!(cfg.lambda > 0.0) || !(cfg.admm_penalty >= 0.0) || cfg.max_iters < 1 ||
      !(cfg.primal_tol > 0.0)) {
    fail(ErrorCode::kInvalidInput, "ADMM config values must be positive");
  }
  check_weights(r, obs.row_degrees(), "row");
  check_weights(c, obs.col_degrees(), "column");

  const Index n1 = obs.n_rows();
  const Index n2 = obs.n_cols();
  const auto n = static_cast<std::size_t>(n1);
  const DenseMatrix m = obs.to_dense();
  const std::vector<std::uint8_t> mask = obs.mask();
  double rho = cfg.admm_penalty;
  if (rho == 0.0) {
    // First threshold lambda / rho lands at a fixed fraction of the top
    // singular value of R P_Omega(M) C, so early iterates stay low rank.
    const double top =
        Eigen::BDCSVD<DenseMatrix>(scale_rows_cols(m, r.values, c.values)).singularValues()(0);
    rho = top > 0.0 ? cfg.lambda / (kAutoThresholdFraction * top) : 1.0;
  }
  const auto& k = simd::kernels();

  DenseMatrix l = DenseMatrix::Zero(n1, n2);
  DenseMatrix x = DenseMatrix::Zero(n1, n2);
  DenseMatrix y = DenseMatrix::Zero(n1, n2);
  if (warm != nullptr) {
    if (warm->auxiliary.rows() != n1 || warm->auxiliary.cols() != n2 ||
        warm->dual.rows() != n1 || warm->dual.cols() != n2) {
      fail(ErrorCode::kInvalidInput, "warm start shape mismatch");
    }
    x = warm->auxiliary;
    y = warm->dual;
    if (warm->final_penalty > 0.0) rho = warm->final_penalty;
  }
  DenseMatrix z(n1, n2);
  DenseMatrix x_prev(n1, n2);
  const auto rows = r.values.asDiagonal();
  const auto cols = c.values.asDiagonal();

  RecoveryResult out;
  for (Index iter = 1; iter <= cfg.max_iters; ++iter) {
    for (Index j = 0; j < n2; ++j) {
      k.admm_primal_column(m.col(j).data(), mask.data() + j * n1, x.col(j).data(),
                           y.col(j).data(), r.values.data(), c.values(j), rho, n,
                           l.col(j).data(), z.col(j).data());
    }
    x_prev.swap(x);
    x = singular_value_threshold(z, cfg.lambda / rho);
    double residual_sq = 0.0;
    double weighted_sq = 0.0;
    for (Index j = 0; j < n2; ++j) {
      const auto sums = k.admm_dual_column(l.col(j).data(), x.col(j).data(), r.values.data(),
                                           c.values(j), rho, n, y.col(j).data());
      residual_sq += sums.residual_sq;
      weighted_sq += sums.weighted_sq;
    }
    const double primal = std::sqrt(residual_sq);
    const double dual = rho * (rows * (x - x_prev) * cols).norm();
    out.residual_trace.push_back(primal);
    out.dual_trace.push_back(dual);
    out.iterations = iter;
    const double rlc = std::sqrt(weighted_sq);
    const double primal_scale = std::max(rlc, x.norm());
    const double dual_scale = std::max((rows * y * cols).norm(), rho * rlc);
    if (primal <= cfg.primal_tol * primal_scale && dual <= cfg.primal_tol * dual_scale) {
      out.converged = true;
      break;
    }
    if (cfg.adaptive_penalty) {
      if (primal > 10.0 * dual) {
        rho *= 2.0;
      } else if (dual > 10.0 * primal) {
        rho *= 0.5;
      }
    }
  }
  out.recovered = std::move(l);
  out.auxiliary = std::move(x);
  out.dual = std::move(y);
  out.final_penalty = rho;
  return out;
}

namespace {

void fill_round_diagnostics(CompletionRound& round, Index k, const DenseMatrix* truth) {
  const DenseMatrix& rec = round.recovery.recovered;
  const SvdFactors f = truncated_svd(rec, k, false);
  if (f.singular(0) > 0.0) {
    const LeverageProfile p = compute_leverage(f, k);
    round.coherence = coherence(p);
    round.l1_loss = hinge_loss(p, target_scores_uniform(rec.rows(), k), LossNorm::kL1);
  }
  if (truth != nullptr) {
    const LeverageProfile rows =
        leverage_of(round.row_weighting.weights.values.asDiagonal() * *truth, k);
    const LeverageProfile cols = leverage_of(
        (*truth * round.col_weighting.weights.values.asDiagonal()).transpose(), k);
    round.truth_row_coherence = coherence(rows);
    round.truth_col_coherence = coherence(cols);
    round.truth_row_l1_loss =
        hinge_loss(rows, target_scores_uniform(truth->rows(), k), LossNorm::kL1);
    round.relative_error = relative_error(rec, *truth);
  }
}

CompletionOutcome run_rounds(const SparseObservation& obs, DenseMatrix current, Index k,
                             Index rounds, const WeightingConfig& wcfg,
                             const AdmmConfig& acfg, const DenseMatrix* truth,
                             const std::vector<AdmmConfig>& per_round) {
  if (rounds < 1) fail(ErrorCode::kInvalidInput, "rounds must be >= 1");
  std::optional<DenseMatrix> truth_t;
  if (truth != nullptr) truth_t = truth->transpose();

  CompletionOutcome outcome;
  for (Index s = 0; s < rounds; ++s) {
    CompletionRound round;
    round.row_weighting = coordinate_descent(current, k, wcfg, truth);
    const DenseMatrix current_t = current.transpose();
    round.col_weighting =
        coordinate_descent(current_t, k, wcfg, truth_t ? &*truth_t : nullptr);
    const AdmmConfig& cfg =
        static_cast<std::size_t>(s) < per_round.size() ? per_round[static_cast<std::size_t>(s)]
                                                       : acfg;
    round.recovery = admm_weighted_complete(obs, round.row_weighting.weights,
                                            round.col_weighting.weights, cfg);
    fill_round_diagnostics(round, k, truth);
    current = round.recovery.recovered;
    outcome.rounds.push_back(std::move(round));
  }
  outcome.result = outcome.rounds.back().recovery;
  return outcome;
}

}  // namespace

CompletionOutcome weighting_completion(const SparseObservation& obs, Index k, Index rounds,
                                       const WeightingConfig& wcfg, const AdmmConfig& acfg,
                                       const DenseMatrix* truth,
                                       const std::vector<AdmmConfig>& per_round) {
  if (obs.empty()) fail(ErrorCode::kDegenerateObservation, "empty observation");
  DenseMatrix trimmed = trim(obs, wcfg.trim_mode, wcfg.seed).to_dense();
  return run_rounds(obs, std::move(trimmed), k, rounds, wcfg, acfg, truth, per_round);
}

CompletionOutcome continue_weighting_completion(const SparseObservation& obs,
                                                const DenseMatrix& previous, Index k,
                                                Index rounds, const WeightingConfig& wcfg,
                                                const AdmmConfig& acfg,
                                                const DenseMatrix* truth) {
  return run_rounds(obs, previous, k, rounds, wcfg, acfg, truth, {});
}

void write_residual_csv(std::ostream& out, const RecoveryResult& r) {
  out << "iteration,primal_residual,dual_residual\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.residual_trace.size(); ++i) {
    out << i + 1 << ',' << r.residual_trace[i] << ',' << r.dual_trace[i] << '\n';
  }
}

}  // namespace wlr
