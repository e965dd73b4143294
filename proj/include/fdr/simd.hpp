#pragma once

#include <cstddef>
#include <string_view>

// Dense vector kernels used by the solver inner loops.
//
// Two tables exist: a portable scalar reference and an AVX2 variant compiled
// into its own translation unit. The active table is chosen once at startup
// from CPUID, and FDR_SIMD=scalar|avx2 in the environment overrides it.
//
// Elementwise kernels (axpy, lincomb, reflect, soft_threshold, gemv_t) perform
// the same floating-point operations in the same order in both tables, so they
// agree bit for bit. Reductions (dot, sum_sq, sum_abs, gemv) reassociate and
// only agree to rounding.

namespace fdr::simd {

struct Kernels {
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_sq)(const double* a, std::size_t n);
  double (*sum_abs)(const double* a, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = a * x + b * y
  void (*lincomb)(double a, const double* x, double b, const double* y, double* out, std::size_t n);
  // out = 2x - z - gamma * g, the argument of the backward step
  void (*reflect)(const double* x, const double* z, const double* g, double gamma, double* out,
                  std::size_t n);
  void (*soft_threshold)(const double* x, double t, double* out, std::size_t n);

  // row-major A (rows x cols): y = A x
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y = A^T x
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
};

const Kernels& scalar_kernels();

// nullptr when the table was not compiled in or the CPU lacks AVX2/FMA.
const Kernels* avx2_kernels();

const Kernels& active();

// Test hook. Passing nullptr restores the startup choice.
void set_active(const Kernels* k);

// "scalar", "avx2" or "auto"; unknown names fall back to auto.
const Kernels& select(std::string_view name);

}  // namespace fdr::simd
