#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace wlr {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// One observed entry (i, j, M_ij), zero-based.
struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// The observed index set together with its values, i.e. P_Omega(M).
///
/// Entries are kept sorted by (row, col). Construction validates bounds,
/// finiteness and uniqueness.
class SparseObservation {
 public:
  SparseObservation() = default;
  SparseObservation(Index n_rows, Index n_cols, std::vector<Triplet> triplets);

  /// Observes every cell of `full` at positions where `mask` is true
  /// (mask is row-major, n_rows * n_cols).
  static SparseObservation from_mask(const DenseMatrix& full,
                                     const std::vector<std::uint8_t>& mask);
  /// Observes every cell of `full`.
  static SparseObservation full(const DenseMatrix& full);

  Index n_rows() const { return n_rows_; }
  Index n_cols() const { return n_cols_; }
  std::size_t size() const { return triplets_.size(); }
  bool empty() const { return triplets_.empty(); }
  const std::vector<Triplet>& triplets() const { return triplets_; }

  std::vector<Index> row_degrees() const;
  std::vector<Index> col_degrees() const;

  /// P_Omega(M) as a dense matrix, zeros off the index set.
  DenseMatrix to_dense() const;
  /// Column-major 0/1 mask of the index set.
  std::vector<std::uint8_t> mask() const;
  SparseObservation transpose() const;
  /// Frobenius norm of the observed values.
  double frobenius_norm() const;

  friend bool operator==(const SparseObservation&, const SparseObservation&) = default;

 private:
  Index n_rows_ = 0;
  Index n_cols_ = 0;
  std::vector<Triplet> triplets_;
};

/// Condensed SVD A = U diag(sigma) V^T with r retained factors.
struct SvdFactors {
  DenseMatrix left;   // n1 x r
  Vector singular;    // r, nonincreasing
  DenseMatrix right;  // n2 x r

  Index rank() const { return singular.size(); }
  DenseMatrix reconstruct() const;
};

inline constexpr int kDefaultSubspaceIterations = 300;
inline constexpr double kDefaultSubspaceTol = 1e-10;
inline constexpr std::uint64_t kDefaultSubspaceSeed = 0x5eed5eedULL;

struct SubspaceIterationOptions {
  int max_iterations = kDefaultSubspaceIterations;
  double tol = kDefaultSubspaceTol;
  std::uint64_t seed = kDefaultSubspaceSeed;
  Index oversampling = 10;
};

void require_finite(const DenseMatrix& a, const char* what);

/// Keeps singular triplets with sigma_i > tol * sigma_1.
SvdFactors condensed_svd(const DenseMatrix& a, double tol = 1e-12);

/// Top-k factors of a dense matrix (direct bidiagonal SVD). With
/// `with_right = false` the right vectors are left empty.
SvdFactors truncated_svd(const DenseMatrix& a, Index k, bool with_right = true);

/// Top-k factors of a sparse observation by deterministic subspace iteration
/// with Rayleigh-Ritz extraction.
SvdFactors truncated_svd(const SparseObservation& a, Index k,
                         const SubspaceIterationOptions& options = {});

/// sigma_1 / sigma_k.
double condition_number(const SvdFactors& f, Index k);

/// Row-scaling and column-scaling: diag(r) * A * diag(c).
DenseMatrix scale_rows_cols(const DenseMatrix& a, const Vector& r, const Vector& c);

}  // namespace wlr
