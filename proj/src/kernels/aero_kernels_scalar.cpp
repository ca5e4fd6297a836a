#include "jetflight/aero_kernels.hpp"

namespace jetflight::kernels::scalar {

void drag_row(const AeroCoefficients& c, double sin2_alpha, std::span<const double> sin2_beta,
              std::span<double> out) {
  const double k1 = c.c1 * sin2_alpha;
  const double k2 = c.c2 * sin2_alpha;
  for (std::size_t i = 0; i < sin2_beta.size(); ++i) {
    const double sb2 = sin2_beta[i];
    out[i] = c.c0 + k1 * sb2 + k2 + c.c3 * sb2;
  }
}

MinLocation row_min(std::span<const double> values) {
  MinLocation best{values.empty() ? 0.0 : values[0], 0};
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < best.value) best = {values[i], i};
  }
  return best;
}

}  // namespace jetflight::kernels::scalar
