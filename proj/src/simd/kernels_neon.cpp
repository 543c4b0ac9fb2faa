#include <arm_neon.h>

#include "dsd/simd/kernels.hpp"

namespace dsd::simd::neon {

double dot(const float* a, const float* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t va = vld1q_f32(a + i);
    const float32x4_t vb = vld1q_f32(b + i);
    acc0 = vfmaq_f64(acc0, vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
    acc1 = vfmaq_f64(acc1, vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

double sum_squares(const float* a, std::size_t n) { return dot(a, a, n); }

void scale(float* a, std::size_t n, float factor) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(a + i, vmulq_n_f32(vld1q_f32(a + i), factor));
  for (; i < n; ++i) a[i] *= factor;
}

void ascii_lower(const char* in, char* out, std::size_t n) {
  const uint8x16_t upper_a = vdupq_n_u8('A');
  const uint8x16_t range = vdupq_n_u8('Z' - 'A');
  const uint8x16_t delta = vdupq_n_u8('a' - 'A');
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const uint8x16_t v = vld1q_u8(reinterpret_cast<const uint8_t*>(in + i));
    const uint8x16_t is_upper = vcleq_u8(vsubq_u8(v, upper_a), range);
    vst1q_u8(reinterpret_cast<uint8_t*>(out + i), vaddq_u8(v, vandq_u8(is_upper, delta)));
  }
  scalar::ascii_lower(in + i, out + i, n - i);
}

}  // namespace dsd::simd::neon
