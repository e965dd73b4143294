#include <atomic>
#include <cstdlib>
#include <string_view>

#include "fdr/simd.hpp"

namespace fdr::simd {

#ifdef FDR_HAVE_AVX2
const Kernels* avx2_table_impl();
#endif

const Kernels* avx2_kernels() {
#ifdef FDR_HAVE_AVX2
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok ? avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& select(std::string_view name) {
  if (name == "scalar") return scalar_kernels();
  const Kernels* v = avx2_kernels();
  return v ? *v : scalar_kernels();
}

namespace {

const Kernels& startup_choice() {
  static const Kernels& k = [] () -> const Kernels& {
    const char* env = std::getenv("FDR_SIMD");
    return select(env ? std::string_view(env) : std::string_view("auto"));
  }();
  return k;
}

std::atomic<const Kernels*> g_override{nullptr};

}  // namespace

const Kernels& active() {
  const Kernels* k = g_override.load(std::memory_order_acquire);
  return k ? *k : startup_choice();
}

void set_active(const Kernels* k) { g_override.store(k, std::memory_order_release); }

}  // namespace fdr::simd
