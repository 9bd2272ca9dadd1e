#include <atomic>
#include <cstdlib>
#include <string>

#include "wlr/error.hpp"
#include "wlr/simd/kernels.hpp"

namespace wlr::simd {

namespace detail {
#ifndef WLR_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&kernels(detect_isa())};
  return slot;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return detail::avx2_table() != nullptr && cpu_has_avx2();
  }
  return false;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::kScalar;
  if (name == "avx2") return Isa::kAvx2;
  return std::nullopt;
}

Isa detect_isa() {
  if (const char* env = std::getenv("WLR_SIMD")) {
    if (auto requested = parse_isa(env); requested && isa_supported(*requested)) {
      return *requested;
    }
  }
  return isa_supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

const KernelTable& kernels(Isa isa) {
  if (isa == Isa::kAvx2 && isa_supported(Isa::kAvx2)) return *detail::avx2_table();
  if (isa == Isa::kAvx2) fail(ErrorCode::kInvalidInput, "avx2 kernels unavailable");
  return detail::scalar_table();
}

const KernelTable& kernels() { return *active_slot().load(std::memory_order_acquire); }

Isa active_isa() { return kernels().isa; }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    fail(ErrorCode::kInvalidInput,
         "simd variant '" + std::string(isa_name(isa)) + "' not supported on this machine");
  }
  active_slot().store(&kernels(isa), std::memory_order_release);
}

}  // namespace wlr::simd
