#pragma once

#include <cstddef>
#include <span>

#include "jetflight/aero_model.hpp"

// Batch coefficient kernels used by the exhaustive grid scans. Every kernel
// has a scalar reference and, on x86-64, an AVX2 variant that is selected at
// runtime. Both variants evaluate the same operation order without FMA
// contraction, so their outputs agree bit for bit.
namespace jetflight::kernels {

enum class Isa { kScalar, kAvx2 };

const char* isa_name(Isa isa);

/// True when the AVX2 variant is compiled in and the CPU supports it.
bool avx2_available();

/// Variant used by the dispatching entry points.
Isa active_isa();

/// Forces the dispatcher onto `isa` (falls back to scalar when unavailable).
void set_isa_override(Isa isa);
void clear_isa_override();

struct MinLocation {
  double value = 0.0;
  std::size_t index = 0;  ///< first index attaining the minimum
};

/// out[i] = C_D for fixed sin^2(alpha) = `sin2_alpha` and sin^2(beta) = sin2_beta[i].
void drag_row(const AeroCoefficients& c, double sin2_alpha, std::span<const double> sin2_beta,
              std::span<double> out);
MinLocation row_min(std::span<const double> values);

namespace scalar {
void drag_row(const AeroCoefficients& c, double sin2_alpha, std::span<const double> sin2_beta,
              std::span<double> out);
MinLocation row_min(std::span<const double> values);
}  // namespace scalar

namespace avx2 {
void drag_row(const AeroCoefficients& c, double sin2_alpha, std::span<const double> sin2_beta,
              std::span<double> out);
MinLocation row_min(std::span<const double> values);
}  // namespace avx2

}  // namespace jetflight::kernels
