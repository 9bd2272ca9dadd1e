#include "wlr/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wlr/error.hpp"
#include "wlr/random.hpp"

namespace wlr {

namespace {

// Independent streams per purpose so that e.g. changing n2 does not
// perturb U.
constexpr std::uint64_t kStreamLeft = 1;
constexpr std::uint64_t kStreamRight = 2;

DenseMatrix draw_t_rows(Index rows, const DenseMatrix& chol_lower, int dof, Rng& rng) {
  const Index k = chol_lower.rows();
  DenseMatrix out(rows, k);
  Vector z(k);
  for (Index i = 0; i < rows; ++i) {
    for (Index a = 0; a < k; ++a) z(a) = rng.normal();
    const double w = rng.chi_square(dof);
    out.row(i) = (chol_lower * z).transpose() * std::sqrt(static_cast<double>(dof) / w);
  }
  return out;
}

}  // namespace

void validate(const GenSpec& spec) {
  if (spec.n1 < 1 || spec.n2 < 1) fail(ErrorCode::kInvalidDims, "dimensions must be >= 1");
  if (spec.k < 1 || spec.k > std::min(spec.n1, spec.n2)) {
    fail(ErrorCode::kInvalidRank, "k must lie in [1, min(n1, n2)]");
  }
  if (spec.t_dof < 1) fail(ErrorCode::kInvalidInput, "t_dof must be >= 1");
  if (!(spec.cov_base > 0.0)) fail(ErrorCode::kInvalidInput, "cov_base must be > 0");
  if (!(spec.cov_decay > 0.0 && spec.cov_decay < 1.0)) {
    fail(ErrorCode::kInvalidInput, "cov_decay must lie in (0, 1)");
  }
}

DenseMatrix t_covariance(const GenSpec& spec) {
  DenseMatrix cov(spec.k, spec.k);
  for (Index i = 0; i < spec.k; ++i) {
    for (Index j = 0; j < spec.k; ++j) {
      cov(i, j) = spec.cov_base * std::pow(spec.cov_decay, static_cast<double>(std::abs(i - j)));
    }
  }
  return cov;
}

DenseMatrix gen_coherent_lowrank(const GenSpec& spec) {
  validate(spec);
  const DenseMatrix chol = t_covariance(spec).llt().matrixL();
  Rng left(derive_seed(spec.seed, kStreamLeft));
  Rng right(derive_seed(spec.seed, kStreamRight));
  const DenseMatrix u = draw_t_rows(spec.n1, chol, spec.t_dof, left);
  const DenseMatrix v = draw_t_rows(spec.n2, chol, spec.t_dof, right);
  return u * v.transpose();
}

std::vector<std::uint8_t> sample_uniform(Index n1, Index n2, double p, std::uint64_t seed) {
  if (n1 < 1 || n2 < 1) fail(ErrorCode::kInvalidDims, "dimensions must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) fail(ErrorCode::kInvalidInput, "p must lie in (0, 1]");
  Rng rng(seed);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n1 * n2));
  for (auto& cell : mask) cell = rng.uniform() < p ? 1 : 0;
  return mask;
}

DenseMatrix add_gaussian_noise(const DenseMatrix& l0, double fraction, double sigma,
                               double mean, std::uint64_t seed) {
  require_finite(l0, "noise input");
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    fail(ErrorCode::kInvalidInput, "fraction must lie in [0, 1]");
  }
  if (!(sigma >= 0.0) || !std::isfinite(mean)) {
    fail(ErrorCode::kInvalidInput, "sigma must be >= 0 and mean finite");
  }
  const auto total = static_cast<std::size_t>(l0.size());
  const auto chosen = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates: the first `chosen` slots are a uniform subset.
  for (std::size_t i = 0; i < chosen; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(total - i));
    std::swap(order[i], order[j]);
  }
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(chosen));
  DenseMatrix m = l0;
  for (std::size_t i = 0; i < chosen; ++i) {
    m.data()[order[i]] += mean + sigma * rng.normal();
  }
  return m;
}

DenseMatrix gen_sparse_corruption(Index n1, Index n2, double p, double s, std::uint64_t seed) {
  if (n1 < 1 || n2 < 1) fail(ErrorCode::kInvalidDims, "dimensions must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::kInvalidInput, "p must lie in [0, 1]");
  if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorCode::kInvalidInput, "s must be > 0");
  Rng rng(seed);
  DenseMatrix out(n1, n2);
  for (Index i = 0; i < n1; ++i) {
    for (Index j = 0; j < n2; ++j) {
      const double u = rng.uniform();
      out(i, j) = u < 0.5 * p ? s : (u < p ? -s : 0.0);
    }
  }
  return out;
}

}  // namespace wlr
