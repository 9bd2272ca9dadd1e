#pragma once

#include <cstdint>

#include "wlr/linalg.hpp"

namespace wlr {

struct GenSpec {
  Index n1 = 0;
  Index n2 = 0;
  Index k = 0;
  std::uint64_t seed = 0;
  int t_dof = 2;
  double cov_base = 2.0;
  double cov_decay = 0.5;
};

void validate(const GenSpec& spec);

/// Lambda_ij = cov_base * cov_decay^|i-j| (k x k).
DenseMatrix t_covariance(const GenSpec& spec);

/// L0 = U V^T with rows of U and V drawn i.i.d. from a multivariate t.
DenseMatrix gen_coherent_lowrank(const GenSpec& spec);

/// Each cell kept independently with probability p. Row-major mask, as taken
/// by SparseObservation::from_mask.
std::vector<std::uint8_t> sample_uniform(Index n1, Index n2, double p, std::uint64_t seed);

/// Adds Gaussian(mean, sigma^2) to round(fraction * n1 * n2) entries chosen
/// uniformly without replacement.
DenseMatrix add_gaussian_noise(const DenseMatrix& l0, double fraction, double sigma,
                               double mean, std::uint64_t seed);

/// Entries are +s w.p. p/2, -s w.p. p/2, 0 otherwise.
DenseMatrix gen_sparse_corruption(Index n1, Index n2, double p, double s, std::uint64_t seed);

}  // namespace wlr
