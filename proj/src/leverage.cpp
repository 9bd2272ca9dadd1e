#include "wlr/leverage.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <string>

#include "wlr/error.hpp"
#include "wlr/random.hpp"
#include "wlr/simd/kernels.hpp"

namespace wlr {

LeverageProfile compute_leverage(const SvdFactors& f, Index k, bool with_cross) {
  if (k < 0 || k > f.rank()) {
    fail(ErrorCode::kInvalidRank, "compute_leverage: k=" + std::to_string(k) +
                                      " exceeds factor count " + std::to_string(f.rank()));
  }
  LeverageProfile p;
  p.rank = k;
  const Index n = f.left.rows();
  p.scores.resize(n);
  simd::kernels().row_sq_norms(f.left.data(), static_cast<std::size_t>(n),
                               static_cast<std::size_t>(k),
                               static_cast<std::size_t>(f.left.outerStride()),
                               p.scores.data());
  if (with_cross) {
    const auto block = f.left.leftCols(k);
    DenseMatrix cross = block * block.transpose();
    cross.diagonal() = p.scores;
    p.cross = std::move(cross);
  }
  return p;
}

LeverageProfile leverage_of(const DenseMatrix& a, Index k, bool with_cross) {
  return compute_leverage(truncated_svd(a, k), k, with_cross);
}

namespace {

// Keeps at most `keep` entries from every line (row or column) whose degree
// exceeds `limit`; `line_of` selects the row or column of a triplet.
template <typename LineOf>
std::vector<Triplet> trim_lines(const std::vector<Triplet>& triplets, Index n_lines,
                                double limit, Index keep, TrimMode mode, Rng& rng,
                                LineOf line_of) {
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_lines));
  for (std::size_t e = 0; e < triplets.size(); ++e) {
    members[static_cast<std::size_t>(line_of(triplets[e]))].push_back(e);
  }
  std::vector<std::uint8_t> drop(triplets.size(), 0);
  for (auto& entries : members) {
    if (static_cast<double>(entries.size()) <= limit) continue;
    if (mode == TrimMode::kZeroOut) {
      for (auto e : entries) drop[e] = 1;
      continue;
    }
    // Partial Fisher-Yates: the first `keep` slots become a uniform subset.
    const std::size_t kept = static_cast<std::size_t>(std::max<Index>(keep, 0));
    for (std::size_t s = 0; s < kept && s < entries.size(); ++s) {
      const std::size_t pick = s + rng.uniform_index(entries.size() - s);
      std::swap(entries[s], entries[pick]);
    }
    for (std::size_t s = kept; s < entries.size(); ++s) drop[entries[s]] = 1;
  }
  std::vector<Triplet> out;
  out.reserve(triplets.size());
  for (std::size_t e = 0; e < triplets.size(); ++e) {
    if (!drop[e]) out.push_back(triplets[e]);
  }
  return out;
}

}  // namespace

SparseObservation trim(const SparseObservation& obs, TrimMode mode, std::uint64_t seed) {
  if (obs.empty()) return obs;
  const Index n1 = obs.n_rows();
  const Index n2 = obs.n_cols();
  const double omega = static_cast<double>(obs.size());
  Rng rng(seed);

  // Thresholds use the original |Omega| for both passes.
  auto rows_done = trim_lines(obs.triplets(), n1, 2.0 * omega / static_cast<double>(n1),
                              static_cast<Index>(std::floor(omega / static_cast<double>(n1))),
                              mode, rng, [](const Triplet& t) { return t.row; });
  auto cols_done = trim_lines(rows_done, n2, 2.0 * omega / static_cast<double>(n2),
                              static_cast<Index>(std::floor(omega / static_cast<double>(n2))),
                              mode, rng, [](const Triplet& t) { return t.col; });
  return SparseObservation(n1, n2, std::move(cols_done));
}

LeverageProfile estimate_leverage(const SparseObservation& obs, const EstimationParams& params) {
  const Index k = params.target_rank;
  if (k < 1 || k > std::min(obs.n_rows(), obs.n_cols())) {
    fail(ErrorCode::kInvalidRank, "estimate_leverage: target rank out of range");
  }
  if (params.accuracy_rho <= 1.0) fail(ErrorCode::kInvalidInput, "accuracy_rho must exceed 1");
  if (obs.empty()) fail(ErrorCode::kDegenerateObservation, "empty observation");

  const SparseObservation trimmed = trim(obs, params.trim_mode, params.seed);
  if (trimmed.empty()) fail(ErrorCode::kDegenerateObservation, "observation empty after trim");
  const SvdFactors f = truncated_svd(trimmed.to_dense(), k);
  if (!(f.singular(k - 1) > 1e-12 * f.singular(0))) {
    fail(ErrorCode::kDegenerateObservation,
         "trimmed observation has rank below " + std::to_string(k));
  }
  return compute_leverage(f, k, params.with_cross);
}

LeverageProfile rank_one_update(const LeverageProfile& p, Index i, double gamma) {
  if (!p.has_cross()) fail(ErrorCode::kNeedsCross, "rank_one_update requires cross leverage");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    fail(ErrorCode::kInvalidStep, "gamma must lie in (0, 1), got " + std::to_string(gamma));
  }
  if (i < 0 || i >= p.size()) fail(ErrorCode::kInvalidInput, "row index out of range");
  const double mu_i = p.scores(i);
  const double denom = 1.0 - gamma * mu_i;
  if (!(denom > 0.0)) fail(ErrorCode::kInvalidStep, "gamma * mu_i must be below 1");

  // With row i scaled by s = sqrt(1 - gamma), the new hat matrix is
  // H' = S (H + g h_i h_i^T) S with g = gamma / (1 - gamma mu_i), h_i = H e_i.
  const DenseMatrix& h = *p.cross;
  const Vector hi = h.col(i);
  const double g = gamma / denom;
  const double s = std::sqrt(1.0 - gamma);

  DenseMatrix updated = h;
  updated.noalias() += g * hi * hi.transpose();
  updated.row(i) *= s;
  updated.col(i) *= s;
  // Exact closed forms on row/column i.
  updated(i, i) = (1.0 - gamma) * mu_i / denom;

  LeverageProfile out;
  out.rank = p.rank;
  out.scores = updated.diagonal();
  out.cross = std::move(updated);
  return out;
}

DenseMatrix reduce_to_bases(const SvdFactors& f) { return f.left; }

DenseMatrix reduce_to_scaled_bases(const SvdFactors& f) {
  return f.left * f.singular.asDiagonal();
}

void write_leverage_csv(std::ostream& out, const LeverageProfile& p) {
  out << "index,score\n" << std::setprecision(17);
  for (Index i = 0; i < p.size(); ++i) out << i << ',' << p.scores(i) << '\n';
}

}  // namespace wlr
