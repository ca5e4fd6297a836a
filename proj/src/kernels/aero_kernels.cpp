#include "jetflight/aero_kernels.hpp"

#include <atomic>

namespace jetflight::kernels {

namespace {

// -1: no override, otherwise static_cast<int>(Isa)
std::atomic<int> g_override{-1};

bool cpu_has_avx2() {
#if defined(JETFLIGHT_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

}  // namespace

#if !defined(JETFLIGHT_HAVE_AVX2_KERNELS)
namespace avx2 {
void drag_row(const AeroCoefficients& c, double sin2_alpha, std::span<const double> sin2_beta,
              std::span<double> out) {
  scalar::drag_row(c, sin2_alpha, sin2_beta, out);
}
MinLocation row_min(std::span<const double> values) { return scalar::row_min(values); }
}  // namespace avx2
#endif

const char* isa_name(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

bool avx2_available() {
  static const bool available = cpu_has_avx2();
  return available;
}

Isa active_isa() {
  const int forced = g_override.load(std::memory_order_relaxed);
  if (forced >= 0) {
    const Isa isa = static_cast<Isa>(forced);
    return (isa == Isa::kAvx2 && !avx2_available()) ? Isa::kScalar : isa;
  }
  return avx2_available() ? Isa::kAvx2 : Isa::kScalar;
}

void set_isa_override(Isa isa) { g_override.store(static_cast<int>(isa), std::memory_order_relaxed); }
void clear_isa_override() { g_override.store(-1, std::memory_order_relaxed); }

void drag_row(const AeroCoefficients& c, double sin2_alpha, std::span<const double> sin2_beta,
              std::span<double> out) {
  if (active_isa() == Isa::kAvx2) {
    avx2::drag_row(c, sin2_alpha, sin2_beta, out);
  } else {
    scalar::drag_row(c, sin2_alpha, sin2_beta, out);
  }
}

MinLocation row_min(std::span<const double> values) {
  return active_isa() == Isa::kAvx2 ? avx2::row_min(values) : scalar::row_min(values);
}

}  // namespace jetflight::kernels
