#include <cmath>

#include "wlr/simd/kernels.hpp"

namespace wlr::simd::detail {
namespace {

void row_sq_norms(const double* u, std::size_t n, std::size_t k, std::size_t ld, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double* col = u + c * ld;
    for (std::size_t i = 0; i < n; ++i) out[i] += col[i] * col[i];
  }
}

void soft_threshold(const double* x, double* y, std::size_t n, double tau) {
  for (std::size_t i = 0; i < n; ++i) {
    const double shrunk = std::fabs(x[i]) - tau;
    y[i] = std::copysign(shrunk > 0.0 ? shrunk : 0.0, x[i]);
  }
}

double hinge_l1(const double* mu, const double* target, const std::uint8_t* active,
                std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double excess = mu[i] - target[i];
    if (active[i] != 0 && excess > 0.0) sum += excess;
  }
  return sum;
}

void admm_primal_column(const double* m, const std::uint8_t* mask, const double* x,
                        const double* y, const double* r, double c, double rho,
                        std::size_t n, double* l, double* z) {
  const double inv_rho = 1.0 / rho;
  for (std::size_t i = 0; i < n; ++i) {
    const double rc = r[i] * c;
    if (rc == 0.0) {
      l[i] = 0.0;
      z[i] = 0.0;
      continue;
    }
    double value;
    if (mask[i] != 0) {
      value = (m[i] + rho * rc * x[i] - rc * y[i]) / (1.0 + rho * (rc * rc));
    } else {
      value = (x[i] - y[i] * inv_rho) / rc;
    }
    l[i] = value;
    z[i] = y[i] * inv_rho + rc * value;
  }
}

DualColumnSums admm_dual_column(const double* l, const double* x, const double* r, double c,
                                double rho, std::size_t n, double* y) {
  DualColumnSums sums;
  for (std::size_t i = 0; i < n; ++i) {
    const double rlc = r[i] * c * l[i];
    const double diff = rlc - x[i];
    y[i] += rho * diff;
    sums.residual_sq += diff * diff;
    sums.weighted_sq += rlc * rlc;
  }
  return sums;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::kScalar, row_sq_norms, soft_threshold, hinge_l1, admm_primal_column,
      admm_dual_column,
  };
  return table;
}

}  // namespace wlr::simd::detail
