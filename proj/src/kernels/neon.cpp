#include <arm_neon.h>

#include "bof/kernels.hpp"

namespace bof::kernels {

namespace {

inline float64x2_t accumulate2(float64x2_t acc, float32x2_t a, float32x2_t b) {
  const float64x2_t d = vsubq_f64(vcvt_f64_f32(a), vcvt_f64_f32(b));
  return vaddq_f64(acc, vmulq_f64(d, d));
}

}  // namespace

double squared_l2_neon(const float* a, const float* b, std::size_t n) {
  float64x2_t l01 = vdupq_n_f64(0.0);
  float64x2_t l23 = vdupq_n_f64(0.0);
  float64x2_t l45 = vdupq_n_f64(0.0);
  float64x2_t l67 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const float32x4_t a0 = vld1q_f32(a + i);
    const float32x4_t a1 = vld1q_f32(a + i + 4);
    const float32x4_t b0 = vld1q_f32(b + i);
    const float32x4_t b1 = vld1q_f32(b + i + 4);
    l01 = accumulate2(l01, vget_low_f32(a0), vget_low_f32(b0));
    l23 = accumulate2(l23, vget_high_f32(a0), vget_high_f32(b0));
    l45 = accumulate2(l45, vget_low_f32(a1), vget_low_f32(b1));
    l67 = accumulate2(l67, vget_high_f32(a1), vget_high_f32(b1));
  }
  const float64x2_t s0 = vaddq_f64(l01, l45);  // l0+l4, l1+l5
  const float64x2_t s1 = vaddq_f64(l23, l67);  // l2+l6, l3+l7
  const float64x2_t t = vaddq_f64(s0, s1);
  double sum = vgetq_lane_f64(t, 0) + vgetq_lane_f64(t, 1);
  for (; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum;
}

}  // namespace bof::kernels
