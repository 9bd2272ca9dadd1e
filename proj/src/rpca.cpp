#include "wlr/rpca.hpp"

#include <algorithm>
#include <cmath>

#include "wlr/completion.hpp"
#include "wlr/error.hpp"
#include "wlr/simd/kernels.hpp"

namespace wlr {

double default_rpca_lambda(Index n1, Index n2) {
  return std::sqrt(static_cast<double>(std::max(n1, n2)));
}

RpcaResult rpca(const DenseMatrix& d, const RpcaConfig& cfg) {
  require_finite(d, "rpca input");
  const double lambda =
      cfg.lambda_rpca > 0.0 ? cfg.lambda_rpca : default_rpca_lambda(d.rows(), d.cols());
  if (!(cfg.penalty_growth >= 1.0) || cfg.max_iters < 1 || !(cfg.tol > 0.0)) {
    fail(ErrorCode::kInvalidInput, "invalid rpca config");
  }

  RpcaResult out;
  out.low_rank = DenseMatrix::Zero(d.rows(), d.cols());
  out.sparse = DenseMatrix::Zero(d.rows(), d.cols());
  const double d_norm = d.norm();
  if (d_norm == 0.0) {
    out.converged = true;
    return out;
  }

  // Work with the equivalent  ||L||_* + (1/lambda) ||S||_1.
  const double sparse_weight = 1.0 / lambda;
  const double spectral = Eigen::BDCSVD<DenseMatrix>(d).singularValues()(0);
  const double inf_norm = d.cwiseAbs().maxCoeff() / sparse_weight;
  DenseMatrix y = d / std::max(spectral, inf_norm);
  double mu = cfg.admm_penalty > 0.0 ? cfg.admm_penalty : 1.25 / spectral;
  const double mu_max = mu * cfg.max_penalty_ratio;
  const auto& kern = simd::kernels();
  const auto count = static_cast<std::size_t>(d.size());

  DenseMatrix work(d.rows(), d.cols());
  for (Index iter = 1; iter <= cfg.max_iters; ++iter) {
    out.low_rank = singular_value_threshold(d - out.sparse + y / mu, 1.0 / mu);
    work = d - out.low_rank + y / mu;
    kern.soft_threshold(work.data(), out.sparse.data(), count, sparse_weight / mu);
    const DenseMatrix gap = d - out.low_rank - out.sparse;
    y += mu * gap;
    mu = std::min(mu * cfg.penalty_growth, mu_max);
    out.iterations = iter;
    if (gap.norm() / d_norm <= cfg.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

namespace {

void require_positive(const DiagonalWeights& w, const char* what) {
  if (!(w.values.array() > 0.0).all()) {
    fail(ErrorCode::kSingularWeight,
         std::string("weighted rpca: zero ") + what + " weight cannot be inverted");
  }
}

}  // namespace

RpcaResult rpca_with_weights(const DenseMatrix& d, const DiagonalWeights& r,
                             const DiagonalWeights& c, const RpcaConfig& cfg) {
  if (r.size() != d.rows() || c.size() != d.cols()) {
    fail(ErrorCode::kInvalidInput, "weighted rpca: weight length mismatch");
  }
  require_positive(r, "row");
  require_positive(c, "column");
  const RpcaResult hat = rpca(scale_rows_cols(d, r.values, c.values), cfg);
  const Vector r_inv = r.values.cwiseInverse();
  const Vector c_inv = c.values.cwiseInverse();
  RpcaResult out;
  out.low_rank = scale_rows_cols(hat.low_rank, r_inv, c_inv);
  out.sparse = scale_rows_cols(hat.sparse, r_inv, c_inv);
  out.iterations = hat.iterations;
  out.converged = hat.converged;
  return out;
}

namespace {

struct WeightedSolve {
  RpcaResult result;
  WeightingResult rows;
  WeightingResult cols;
};

WeightedSolve solve_weighted(const DenseMatrix& d, const DenseMatrix& weigh_from, Index k,
                             const WeightingConfig& wcfg, const RpcaConfig& cfg,
                             const DenseMatrix* reference) {
  WeightedSolve s;
  s.rows = coordinate_descent(weigh_from, k, wcfg, reference);
  const DenseMatrix from_t = weigh_from.transpose();
  std::optional<DenseMatrix> ref_t;
  if (reference != nullptr) ref_t = reference->transpose();
  s.cols = coordinate_descent(from_t, k, wcfg, ref_t ? &*ref_t : nullptr);
  s.result = rpca_with_weights(d, s.rows.weights, s.cols.weights, cfg);
  return s;
}

}  // namespace

WeightedRpcaOutcome weighted_rpca(const DenseMatrix& d, Index k, RpcaVariant variant,
                                  const WeightingConfig& wcfg, const RpcaConfig& cfg,
                                  const DenseMatrix* reference) {
  require_finite(d, "weighted rpca input");
  if (k < 1 || k > std::min(d.rows(), d.cols())) {
    fail(ErrorCode::kInvalidRank, "weighted rpca: k out of range");
  }
  WeightedSolve s = solve_weighted(d, d, k, wcfg, cfg, reference);
  if (variant == RpcaVariant::kType2) {
    const DenseMatrix first = s.result.low_rank;
    s = solve_weighted(d, first, k, wcfg, cfg, reference);
  }
  return {std::move(s.result), s.rows.weights, s.cols.weights, std::move(s.rows),
          std::move(s.cols)};
}

}  // namespace wlr
