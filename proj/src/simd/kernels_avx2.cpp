// Compiled with -mavx2 only (no FMA contraction) so that the elementwise
// kernels round exactly like the scalar reference.

#include <immintrin.h>

#include <cstring>

#include "wlr/simd/kernels.hpp"

namespace wlr::simd::detail {
namespace {

inline __m256d load_mask4(const std::uint8_t* p) {
  std::int32_t bits;
  std::memcpy(&bits, p, sizeof(bits));
  const __m128i bytes = _mm_cvtsi32_si128(bits);
  const __m256d as_double = _mm256_cvtepi32_pd(_mm_cvtepu8_epi32(bytes));
  return _mm256_cmp_pd(as_double, _mm256_setzero_pd(), _CMP_NEQ_OQ);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

void row_sq_norms(const double* u, std::size_t n, std::size_t k, std::size_t ld, double* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (std::size_t c = 0; c < k; ++c) {
      const double* col = u + c * ld + i;
      const __m256d a = _mm256_loadu_pd(col);
      const __m256d b = _mm256_loadu_pd(col + 4);
      acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(a, a));
      acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(b, b));
    }
    _mm256_storeu_pd(out + i, acc0);
    _mm256_storeu_pd(out + i + 4, acc1);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double v = u[c * ld + i];
      acc += v * v;
    }
    out[i] = acc;
  }
}

void soft_threshold(const double* x, double* y, std::size_t n, double tau) {
  const __m256d sign_bit = _mm256_set1_pd(-0.0);
  const __m256d vtau = _mm256_set1_pd(tau);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d magnitude = _mm256_andnot_pd(sign_bit, v);
    const __m256d shrunk = _mm256_max_pd(_mm256_sub_pd(magnitude, vtau), zero);
    _mm256_storeu_pd(y + i, _mm256_or_pd(shrunk, _mm256_and_pd(sign_bit, v)));
  }
  for (; i < n; ++i) {
    const double shrunk = __builtin_fabs(x[i]) - tau;
    y[i] = __builtin_copysign(shrunk > 0.0 ? shrunk : 0.0, x[i]);
  }
}

double hinge_l1(const double* mu, const double* target, const std::uint8_t* active,
                std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d excess =
        _mm256_sub_pd(_mm256_loadu_pd(mu + i), _mm256_loadu_pd(target + i));
    const __m256d positive = _mm256_max_pd(excess, zero);
    acc = _mm256_add_pd(acc, _mm256_and_pd(positive, load_mask4(active + i)));
  }
  double sum = hsum(acc);
  for (; i < n; ++i) {
    const double excess = mu[i] - target[i];
    if (active[i] != 0 && excess > 0.0) sum += excess;
  }
  return sum;
}

void admm_primal_column(const double* m, const std::uint8_t* mask, const double* x,
                        const double* y, const double* r, double c, double rho,
                        std::size_t n, double* l, double* z) {
  const double inv_rho = 1.0 / rho;
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vrho = _mm256_set1_pd(rho);
  const __m256d vinv_rho = _mm256_set1_pd(inv_rho);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vr = _mm256_loadu_pd(r + i);
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d vm = _mm256_loadu_pd(m + i);
    const __m256d rc = _mm256_mul_pd(vr, vc);

    const __m256d num = _mm256_sub_pd(
        _mm256_add_pd(vm, _mm256_mul_pd(_mm256_mul_pd(vrho, rc), vx)), _mm256_mul_pd(rc, vy));
    const __m256d den = _mm256_add_pd(one, _mm256_mul_pd(vrho, _mm256_mul_pd(rc, rc)));
    const __m256d observed = _mm256_div_pd(num, den);
    const __m256d unobserved =
        _mm256_div_pd(_mm256_sub_pd(vx, _mm256_mul_pd(vy, vinv_rho)), rc);
    __m256d value = _mm256_blendv_pd(unobserved, observed, load_mask4(mask + i));
    __m256d zv = _mm256_add_pd(_mm256_mul_pd(vy, vinv_rho), _mm256_mul_pd(rc, value));

    const __m256d excluded = _mm256_cmp_pd(rc, zero, _CMP_EQ_OQ);
    value = _mm256_blendv_pd(value, zero, excluded);
    zv = _mm256_blendv_pd(zv, zero, excluded);
    _mm256_storeu_pd(l + i, value);
    _mm256_storeu_pd(z + i, zv);
  }
  for (; i < n; ++i) {
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
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vrho = _mm256_set1_pd(rho);
  __m256d res = _mm256_setzero_pd();
  __m256d wsq = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d rlc = _mm256_mul_pd(_mm256_mul_pd(_mm256_loadu_pd(r + i), vc),
                                      _mm256_loadu_pd(l + i));
    const __m256d diff = _mm256_sub_pd(rlc, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(vrho, diff)));
    res = _mm256_add_pd(res, _mm256_mul_pd(diff, diff));
    wsq = _mm256_add_pd(wsq, _mm256_mul_pd(rlc, rlc));
  }
  DualColumnSums sums{hsum(res), hsum(wsq)};
  for (; i < n; ++i) {
    const double rlc = r[i] * c * l[i];
    const double diff = rlc - x[i];
    y[i] += rho * diff;
    sums.residual_sq += diff * diff;
    sums.weighted_sq += rlc * rlc;
  }
  return sums;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{
      Isa::kAvx2, row_sq_norms, soft_threshold, hinge_l1, admm_primal_column,
      admm_dual_column,
  };
  return &table;
}

}  // namespace wlr::simd::detail
