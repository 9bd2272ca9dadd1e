#include "wlr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Sparse>

#include "wlr/error.hpp"
#include "wlr/random.hpp"

namespace wlr {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput:
      return "invalid-input";
    case ErrorCode::kInvalidRank:
      return "invalid-rank";
    case ErrorCode::kRankDeficient:
      return "rank-deficient";
    case ErrorCode::kDegenerateObservation:
      return "degenerate-observation";
    case ErrorCode::kNeedsCross:
      return "needs-cross";
    case ErrorCode::kInvalidStep:
      return "invalid-step";
    case ErrorCode::kInvalidLeverage:
      return "invalid-leverage";
    case ErrorCode::kInvalidDims:
      return "invalid-dims";
    case ErrorCode::kInvalidMarginals:
      return "invalid-marginals";
    case ErrorCode::kSingularWeight:
      return "singular-weight";
    case ErrorCode::kUndefinedReference:
      return "undefined-reference";
    case ErrorCode::kIo:
      return "io";
  }
  return "unknown";
}

SparseObservation::SparseObservation(Index n_rows, Index n_cols, std::vector<Triplet> triplets)
    : n_rows_(n_rows), n_cols_(n_cols), triplets_(std::move(triplets)) {
  if (n_rows < 0 || n_cols < 0) fail(ErrorCode::kInvalidInput, "negative dimensions");
  for (const auto& t : triplets_) {
    if (t.row < 0 || t.row >= n_rows || t.col < 0 || t.col >= n_cols) {
      fail(ErrorCode::kInvalidInput, "observation index (" + std::to_string(t.row) + ", " +
                                         std::to_string(t.col) + ") out of bounds");
    }
    if (!std::isfinite(t.value)) fail(ErrorCode::kInvalidInput, "non-finite observed value");
  }
  std::sort(triplets_.begin(), triplets_.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  auto dup = std::adjacent_find(triplets_.begin(), triplets_.end(),
                                [](const Triplet& a, const Triplet& b) {
                                  return a.row == b.row && a.col == b.col;
                                });
  if (dup != triplets_.end()) {
    fail(ErrorCode::kInvalidInput, "duplicate observation at (" + std::to_string(dup->row) +
                                       ", " + std::to_string(dup->col) + ")");
  }
}

SparseObservation SparseObservation::from_mask(const DenseMatrix& full,
                                               const std::vector<std::uint8_t>& mask) {
  const Index n1 = full.rows();
  const Index n2 = full.cols();
  if (static_cast<Index>(mask.size()) != n1 * n2) {
    fail(ErrorCode::kInvalidInput, "mask size does not match matrix");
  }
  std::vector<Triplet> triplets;
  for (Index i = 0; i < n1; ++i) {
    for (Index j = 0; j < n2; ++j) {
      if (mask[static_cast<std::size_t>(i * n2 + j)] != 0) {
        triplets.push_back({i, j, full(i, j)});
      }
    }
  }
  return SparseObservation(n1, n2, std::move(triplets));
}

SparseObservation SparseObservation::full(const DenseMatrix& full) {
  return from_mask(full, std::vector<std::uint8_t>(static_cast<std::size_t>(full.size()), 1));
}

std::vector<Index> SparseObservation::row_degrees() const {
  std::vector<Index> degrees(static_cast<std::size_t>(n_rows_), 0);
  for (const auto& t : triplets_) ++degrees[static_cast<std::size_t>(t.row)];
  return degrees;
}

std::vector<Index> SparseObservation::col_degrees() const {
  std::vector<Index> degrees(static_cast<std::size_t>(n_cols_), 0);
  for (const auto& t : triplets_) ++degrees[static_cast<std::size_t>(t.col)];
  return degrees;
}

DenseMatrix SparseObservation::to_dense() const {
  DenseMatrix dense = DenseMatrix::Zero(n_rows_, n_cols_);
  for (const auto& t : triplets_) dense(t.row, t.col) = t.value;
  return dense;
}

std::vector<std::uint8_t> SparseObservation::mask() const {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(n_rows_ * n_cols_), 0);
  for (const auto& t : triplets_) m[static_cast<std::size_t>(t.col * n_rows_ + t.row)] = 1;
  return m;
}

SparseObservation SparseObservation::transpose() const {
  std::vector<Triplet> swapped;
  swapped.reserve(triplets_.size());
  for (const auto& t : triplets_) swapped.push_back({t.col, t.row, t.value});
  return SparseObservation(n_cols_, n_rows_, std::move(swapped));
}

double SparseObservation::frobenius_norm() const {
  double sum = 0.0;
  for (const auto& t : triplets_) sum += t.value * t.value;
  return std::sqrt(sum);
}

DenseMatrix SvdFactors::reconstruct() const {
  return left * singular.asDiagonal() * right.transpose();
}

void require_finite(const DenseMatrix& a, const char* what) {
  if (!a.allFinite()) fail(ErrorCode::kInvalidInput, std::string(what) + " has non-finite entries");
}

SvdFactors condensed_svd(const DenseMatrix& a, double tol) {
  require_finite(a, "svd input");
  SvdFactors out;
  if (a.size() == 0) {
    out.left.resize(a.rows(), 0);
    out.right.resize(a.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<DenseMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double cutoff = tol * sigma(0);
  Index r = 0;
  while (r < sigma.size() && sigma(r) > cutoff) ++r;
  out.left = svd.matrixU().leftCols(r);
  out.singular = sigma.head(r);
  out.right = svd.matrixV().leftCols(r);
  return out;
}

SvdFactors truncated_svd(const DenseMatrix& a, Index k, bool with_right) {
  require_finite(a, "svd input");
  if (k < 1 || k > std::min(a.rows(), a.cols())) {
    fail(ErrorCode::kInvalidRank, "truncated_svd: k=" + std::to_string(k) + " out of range");
  }
  const unsigned int options =
      with_right ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : Eigen::ComputeThinU;
  Eigen::BDCSVD<DenseMatrix> svd(a, options);
  SvdFactors out;
  out.left = svd.matrixU().leftCols(k);
  out.singular = svd.singularValues().head(k);
  if (with_right) {
    out.right = svd.matrixV().leftCols(k);
  } else {
    out.right.resize(a.cols(), 0);
  }
  return out;
}

namespace {

DenseMatrix orthonormal_basis(const DenseMatrix& block) {
  Eigen::HouseholderQR<DenseMatrix> qr(block);
  return qr.householderQ() * DenseMatrix::Identity(block.rows(), block.cols());
}

}  // namespace

SvdFactors truncated_svd(const SparseObservation& obs, Index k,
                         const SubspaceIterationOptions& options) {
  const Index n1 = obs.n_rows();
  const Index n2 = obs.n_cols();
  if (k < 1 || k > std::min(n1, n2)) {
    fail(ErrorCode::kInvalidRank, "truncated_svd: k=" + std::to_string(k) + " out of range");
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(obs.size());
  for (const auto& t : obs.triplets()) entries.emplace_back(t.row, t.col, t.value);
  Eigen::SparseMatrix<double> a(n1, n2);
  a.setFromTriplets(entries.begin(), entries.end());

  const Index block = std::min(k + options.oversampling, std::min(n1, n2));
  Rng rng(options.seed);
  DenseMatrix q(n2, block);
  for (Index j = 0; j < block; ++j) {
    for (Index i = 0; i < n2; ++i) q(i, j) = rng.normal();
  }
  q = orthonormal_basis(q);

  SvdFactors out;
  Vector previous = Vector::Constant(k, -1.0);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    DenseMatrix y = orthonormal_basis(a * q);
    q = orthonormal_basis(a.transpose() * y);

    // Rayleigh-Ritz on the current right subspace.
    DenseMatrix projected = a * q;
    Eigen::JacobiSVD<DenseMatrix> small(projected, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector sigma = small.singularValues().head(k);
    out.left = small.matrixU().leftCols(k);
    out.singular = sigma;
    out.right = q * small.matrixV().leftCols(k);

    const double scale = std::max(sigma(0), 1e-300);
    if ((sigma - previous).cwiseAbs().maxCoeff() <= options.tol * scale) break;
    previous = sigma;
  }
  return out;
}

double condition_number(const SvdFactors& f, Index k) {
  if (k < 1 || k > f.rank()) {
    fail(ErrorCode::kInvalidRank, "condition_number: k=" + std::to_string(k) + " exceeds rank");
  }
  const double smallest = f.singular(k - 1);
  if (!(smallest > 0.0)) fail(ErrorCode::kRankDeficient, "sigma_k is zero");
  return f.singular(0) / smallest;
}

DenseMatrix scale_rows_cols(const DenseMatrix& a, const Vector& r, const Vector& c) {
  return r.asDiagonal() * a * c.asDiagonal();
}

}  // namespace wlr
