#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dsd/simd/kernels.hpp"

namespace dsd::simd {

namespace {

struct KernelTable {
  Isa isa;
  double (*dot)(const float*, const float*, std::size_t);
  double (*sum_squares)(const float*, std::size_t);
  void (*scale)(float*, std::size_t, float);
  void (*ascii_lower)(const char*, char*, std::size_t);
};

constexpr KernelTable kScalar{Isa::scalar, &scalar::dot, &scalar::sum_squares, &scalar::scale,
                              &scalar::ascii_lower};
#if defined(DSD_HAVE_AVX2_KERNELS)
constexpr KernelTable kAvx2{Isa::avx2, &avx2::dot, &avx2::sum_squares, &avx2::scale,
                            &avx2::ascii_lower};
#endif
#if defined(DSD_HAVE_NEON_KERNELS)
constexpr KernelTable kNeon{Isa::neon, &neon::dot, &neon::sum_squares, &neon::scale,
                            &neon::ascii_lower};
#endif

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &kScalar;
    case Isa::avx2:
#if defined(DSD_HAVE_AVX2_KERNELS)
      if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kAvx2;
#endif
      return nullptr;
    case Isa::neon:
#if defined(DSD_HAVE_NEON_KERNELS)
      return &kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable* detect() {
  if (const char* env = std::getenv("DSD_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return &kScalar;
  }
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (const KernelTable* t = table_for(isa)) return t;
  }
  return &kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

const KernelTable& kernels() { return *current().load(std::memory_order_acquire); }

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) { return table_for(isa) != nullptr; }

Isa active_isa() { return kernels().isa; }

void force_isa(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) throw std::invalid_argument("SIMD variant not available: " + std::string(isa_name(isa)));
  current().store(t, std::memory_order_release);
}

void reset_isa() { current().store(detect(), std::memory_order_release); }

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  return kernels().dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const float> a) { return kernels().sum_squares(a.data(), a.size()); }

void scale(std::span<float> a, float factor) { kernels().scale(a.data(), a.size(), factor); }

void ascii_lower(std::string_view in, char* out) { kernels().ascii_lower(in.data(), out, in.size()); }

std::string to_lower_ascii(std::string_view in) {
  std::string out(in.size(), '\0');
  kernels().ascii_lower(in.data(), out.data(), in.size());
  return out;
}

}  // namespace dsd::simd
