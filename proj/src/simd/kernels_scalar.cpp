#include "dsd/simd/kernels.hpp"

namespace dsd::simd::scalar {

double dot(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

double sum_squares(const float* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(a[i]);
  return acc;
}

void scale(float* a, std::size_t n, float factor) {
  for (std::size_t i = 0; i < n; ++i) a[i] *= factor;
}

void ascii_lower(const char* in, char* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const char c = in[i];
    out[i] = (c >= 'A' && c <= 'Z') ? static_cast<char>(c + ('a' - 'A')) : c;
  }
}

}  // namespace dsd::simd::scalar
