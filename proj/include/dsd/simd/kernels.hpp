#pragma once
// Data-parallel kernels used by the similarity scan, vector normalization and
// case-folding in the text scorers.
//
// Every kernel has a scalar reference in dsd::simd::scalar. Vector variants
// (AVX2 on x86-64, NEON on aarch64) are compiled into separate translation
// units and selected once at runtime from the CPU feature set. Setting the
// environment variable DSD_SIMD=scalar forces the reference path.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace dsd::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

// True when the variant was compiled in and the running CPU supports it.
bool isa_supported(Isa isa);

// The variant the dispatching entry points below currently route to.
Isa active_isa();

// Test hook. Throws std::invalid_argument if the variant is unsupported.
void force_isa(Isa isa);

// Restores the automatically detected variant.
void reset_isa();

// Sum of a[i] * b[i], accumulated in double precision.
// Precondition: a.size() == b.size().
double dot(std::span<const float> a, std::span<const float> b);

// Sum of a[i]^2, accumulated in double precision.
double sum_squares(std::span<const float> a);

// a[i] *= factor
void scale(std::span<float> a, float factor);

// ASCII case folding; bytes >= 0x80 are copied unchanged.
void ascii_lower(std::string_view in, char* out);
std::string to_lower_ascii(std::string_view in);

namespace scalar {
double dot(const float* a, const float* b, std::size_t n);
double sum_squares(const float* a, std::size_t n);
void scale(float* a, std::size_t n, float factor);
void ascii_lower(const char* in, char* out, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const float* a, const float* b, std::size_t n);
double sum_squares(const float* a, std::size_t n);
void scale(float* a, std::size_t n, float factor);
void ascii_lower(const char* in, char* out, std::size_t n);
}  // namespace avx2

namespace neon {
double dot(const float* a, const float* b, std::size_t n);
double sum_squares(const float* a, std::size_t n);
void scale(float* a, std::size_t n, float factor);
void ascii_lower(const char* in, char* out, std::size_t n);
}  // namespace neon

}  // namespace dsd::simd
