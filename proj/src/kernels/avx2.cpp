// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include "bof/kernels.hpp"

namespace bof::kernels {

namespace {

inline __m256d accumulate4(__m256d acc, const float* a, const float* b) {
  const __m256d av = _mm256_cvtps_pd(_mm_loadu_ps(a));
  const __m256d bv = _mm256_cvtps_pd(_mm_loadu_ps(b));
  const __m256d d = _mm256_sub_pd(av, bv);
  return _mm256_add_pd(acc, _mm256_mul_pd(d, d));
}

}  // namespace

double squared_l2_avx2(const float* a, const float* b, std::size_t n) {
  __m256d lo = _mm256_setzero_pd();  // lanes 0..3
  __m256d hi = _mm256_setzero_pd();  // lanes 4..7
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    lo = accumulate4(lo, a + i, b + i);
    hi = accumulate4(hi, a + i + 4, b + i + 4);
  }
  const __m256d pairs = _mm256_add_pd(lo, hi);  // l0+l4, l1+l5, l2+l6, l3+l7
  const __m128d folded =
      _mm_add_pd(_mm256_castpd256_pd128(pairs), _mm256_extractf128_pd(pairs, 1));
  double sum = _mm_cvtsd_f64(folded) + _mm_cvtsd_f64(_mm_unpackhi_pd(folded, folded));
  for (; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum;
}

}  // namespace bof::kernels
