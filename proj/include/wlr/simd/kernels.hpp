#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference and
// an AVX2 variant; the active table is picked once at startup from CPUID and
// may be overridden (WLR_SIMD=scalar|avx2, or set_isa()).
//
// Elementwise kernels produce bitwise-identical results across variants.
// Reductions (hinge_l1, admm_dual_column) sum in a different order and agree
// to rounding only.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace wlr::simd {

enum class Isa { kScalar, kAvx2 };

struct DualColumnSums {
  double residual_sq = 0.0;  // sum (r c L - X)^2
  double weighted_sq = 0.0;  // sum (r c L)^2
};

struct KernelTable {
  Isa isa;

  /// out[i] = sum_c u[c * ld + i]^2 for a column-major n x k block.
  void (*row_sq_norms)(const double* u, std::size_t n, std::size_t k, std::size_t ld,
                       double* out);

  /// y = sign(x) * max(|x| - tau, 0).
  void (*soft_threshold)(const double* x, double* y, std::size_t n, double tau);

  /// sum over active[i] != 0 of max(mu[i] - target[i], 0).
  double (*hinge_l1)(const double* mu, const double* target, const std::uint8_t* active,
                     std::size_t n);

  /// One column of the weighted-ADMM L-update followed by z = y / rho + r c L.
  /// Observed cells (mask != 0):  L = (m + rho r c x - r c y) / (1 + rho (r c)^2)
  /// Unobserved cells:            L = (x - y / rho) / (r c)
  /// Cells with r c == 0 are excluded from the problem: L = 0, z = 0.
  void (*admm_primal_column)(const double* m, const std::uint8_t* mask, const double* x,
                             const double* y, const double* r, double c, double rho,
                             std::size_t n, double* l, double* z);

  /// Dual ascent y += rho (r c L - x) on one column; returns residual sums.
  DualColumnSums (*admm_dual_column)(const double* l, const double* x, const double* r,
                                     double c, double rho, std::size_t n, double* y);
};

bool isa_supported(Isa isa);
std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

/// Best supported ISA, unless WLR_SIMD names another supported one.
Isa detect_isa();
Isa active_isa();
/// Throws wlr::Error(kInvalidInput) when the ISA is not available on this CPU
/// or was not compiled in.
void set_isa(Isa isa);

const KernelTable& kernels();
const KernelTable& kernels(Isa isa);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace wlr::simd
