#pragma once

#include <cstdint>
#include <optional>
#include <ostream>

#include "wlr/linalg.hpp"

namespace wlr {

/// Row leverage scores of a rank-k subspace, optionally with the full
/// cross-leverage block (U_k U_k^T). Column scores come from transposed calls.
struct LeverageProfile {
  Index rank = 0;
  Vector scores;
  std::optional<DenseMatrix> cross;

  Index size() const { return scores.size(); }
  bool has_cross() const { return cross.has_value(); }
  double max_score() const { return scores.size() ? scores.maxCoeff() : 0.0; }
};

enum class TrimMode { kZeroOut, kSubsample };

struct EstimationParams {
  double accuracy_rho = 10.0;  // target additive error 1 / (2 rho)
  Index target_rank = 1;
  TrimMode trim_mode = TrimMode::kSubsample;
  std::uint64_t seed = 0;
  bool with_cross = false;
};

/// Leverage (and optionally cross leverage) of the first k left vectors.
LeverageProfile compute_leverage(const SvdFactors& f, Index k, bool with_cross = false);

/// Leverage of the best rank-k approximation of a dense matrix.
LeverageProfile leverage_of(const DenseMatrix& a, Index k, bool with_cross = false);

/// Rows whose degree exceeds 2|Omega|/n1 are emptied (zero-out) or reduced to a
/// seeded uniform floor(|Omega|/n1)-subset (subsample); columns likewise, rows
/// first.
SparseObservation trim(const SparseObservation& obs, TrimMode mode = TrimMode::kSubsample,
                       std::uint64_t seed = 0);

/// Trim, rank-k truncated SVD, leverage. Throws kDegenerateObservation when
/// the trimmed observation is empty or has rank below k.
LeverageProfile estimate_leverage(const SparseObservation& obs, const EstimationParams& params);

/// Closed-form profile of W(n1, i, gamma) * M, where row i is scaled by
/// sqrt(1 - gamma). Requires the cross block.
LeverageProfile rank_one_update(const LeverageProfile& p, Index i, double gamma);

/// Column bases U of the condensed SVD (n1 x r). For any nonsingular diagonal
/// R the full-rank (r) leverage of R*A equals that of R*U.
DenseMatrix reduce_to_bases(const SvdFactors& f);

/// U * diag(sigma) (n1 x r). Preserves the rank-k leverage of R*A for every k,
/// since R*A = (R*U*Sigma) * V^T with V^T row-orthonormal.
DenseMatrix reduce_to_scaled_bases(const SvdFactors& f);

void write_leverage_csv(std::ostream& out, const LeverageProfile& p);

}  // namespace wlr
