// Compiled with -mavx2 only; callers reach it through the runtime dispatcher.
#include <immintrin.h>

#include "jetflight/aero_kernels.hpp"

namespace jetflight::kernels::avx2 {

namespace {
constexpr std::size_t kLanes = 4;
}

void drag_row(const AeroCoefficients& c, double sin2_alpha, std::span<const double> sin2_beta,
              std::span<double> out) {
  const double k1 = c.c1 * sin2_alpha;
  const double k2 = c.c2 * sin2_alpha;
  const __m256d vc0 = _mm256_set1_pd(c.c0);
  const __m256d vk1 = _mm256_set1_pd(k1);
  const __m256d vk2 = _mm256_set1_pd(k2);
  const __m256d vc3 = _mm256_set1_pd(c.c3);

  const std::size_t n = sin2_beta.size();
  const std::size_t simd_end = n - n % kLanes;
  std::size_t i = 0;
  for (; i < simd_end; i += kLanes) {
    const __m256d sb2 = _mm256_loadu_pd(sin2_beta.data() + i);
    // ((c0 + k1*sb2) + k2) + c3*sb2, same association as the scalar loop
    __m256d acc = _mm256_add_pd(vc0, _mm256_mul_pd(vk1, sb2));
    acc = _mm256_add_pd(acc, vk2);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(vc3, sb2));
    _mm256_storeu_pd(out.data() + i, acc);
  }
  for (; i < n; ++i) {
    const double sb2 = sin2_beta[i];
    out[i] = c.c0 + k1 * sb2 + k2 + c.c3 * sb2;
  }
}

MinLocation row_min(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2 * kLanes) return scalar::row_min(values);

  __m256d vmin = _mm256_loadu_pd(values.data());
  const std::size_t simd_end = n - n % kLanes;
  for (std::size_t i = kLanes; i < simd_end; i += kLanes) {
    vmin = _mm256_min_pd(vmin, _mm256_loadu_pd(values.data() + i));
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, vmin);
  double best = lanes[0];
  for (std::size_t l = 1; l < kLanes; ++l)
    if (lanes[l] < best) best = lanes[l];
  for (std::size_t i = simd_end; i < n; ++i)
    if (values[i] < best) best = values[i];

  // First index holding the minimum keeps tie-breaking identical to scalar.
  for (std::size_t i = 0; i < n; ++i)
    if (values[i] == best) return {best, i};
  return scalar::row_min(values);  // only reachable with NaN input
}

}  // namespace jetflight::kernels::avx2
