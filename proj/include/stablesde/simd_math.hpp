#pragma once

// Batched Chambers-Mallows-Stuck transform for alpha = 1/2, where it reduces to
//   X = sin(U) / (2 E cos^2 U),  U = pi (u - 1/2),  E = -log v.
// With STABLESDE_USE_LIBMVEC on an AVX2 target the loop calls glibc's vector
// sin/log entry points directly (no -ffast-math needed); otherwise it is scalar.

#include <cmath>
#include <cstddef>
#include <numbers>

#if defined(STABLESDE_USE_LIBMVEC) && defined(__AVX2__)
#include <immintrin.h>
extern "C" __m256d _ZGVdN4v_sin(__m256d);
extern "C" __m256d _ZGVdN4v_log(__m256d);
#define STABLESDE_SIMD_CMS 1
#endif

namespace stablesde {

inline constexpr bool kSimdCms =
#ifdef STABLESDE_SIMD_CMS
    true;
#else
    false;
#endif

/// z[k] = scale * CMS_{1/2}(u[k], v[k]); u, v uniform on (0,1).
/// cos(pi (u - 1/2)) is written as sin(pi u) so no sincos fusion occurs.
inline void cms_half_batch(const double* u, const double* v, double* z, std::size_t n, double scale) {
  constexpr double kPi = std::numbers::pi;
  std::size_t k = 0;
#ifdef STABLESDE_SIMD_CMS
  const __m256d pi = _mm256_set1_pd(kPi);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d minus_two = _mm256_set1_pd(-2.0);
  const __m256d sc = _mm256_set1_pd(scale);
  for (; k + 4 <= n; k += 4) {
    const __m256d uu = _mm256_loadu_pd(u + k);
    const __m256d s = _ZGVdN4v_sin(_mm256_mul_pd(pi, _mm256_sub_pd(uu, half)));
    const __m256d c = _ZGVdN4v_sin(_mm256_mul_pd(pi, uu));
    const __m256d l = _ZGVdN4v_log(_mm256_loadu_pd(v + k));
    const __m256d den = _mm256_mul_pd(_mm256_mul_pd(minus_two, l), _mm256_mul_pd(c, c));
    _mm256_storeu_pd(z + k, _mm256_div_pd(_mm256_mul_pd(sc, s), den));
  }
#endif
  for (; k < n; ++k) {
    const double c = std::sin(kPi * u[k]);
    z[k] = scale * std::sin(kPi * (u[k] - 0.5)) / (-2.0 * std::log(v[k]) * c * c);
  }
}

}  // namespace stablesde
