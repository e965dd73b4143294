// Built with -mavx2 -mfma. Only reached through the dispatch table after a
// CPUID check, so nothing here may be inlined into generic code.
#include "fdr/simd.hpp"

#include <immintrin.h>

#include <cmath>

namespace fdr::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq(const double* a, std::size_t n) { return dot(a, a, n); }

double sum_abs(const double* a, std::size_t n) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d s0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) s0 = _mm256_add_pd(s0, _mm256_and_pd(mask, _mm256_loadu_pd(a + i)));
  double s = hsum(s0);
  for (; i < n; ++i) s += std::fabs(a[i]);
  return s;
}

// elementwise kernels: mul then add, never fused, to match the scalar table
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void lincomb(double a, const double* x, double b, const double* y, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a), vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d p = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    __m256d q = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(p, q));
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void reflect(const double* x, const double* z, const double* g, double gamma, double* out,
             std::size_t n) {
  const __m256d two = _mm256_set1_pd(2.0), vg = _mm256_set1_pd(gamma);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_sub_pd(_mm256_mul_pd(two, _mm256_loadu_pd(x + i)), _mm256_loadu_pd(z + i));
    _mm256_storeu_pd(out + i, _mm256_sub_pd(t, _mm256_mul_pd(vg, _mm256_loadu_pd(g + i))));
  }
  for (; i < n; ++i) out[i] = (2.0 * x[i] - z[i]) - gamma * g[i];
}

// max(v - t, 0) + min(v + t, 0): exactly one side is nonzero, adding 0 is exact
void soft_threshold(const double* x, double t, double* out, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(t), zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d hi = _mm256_max_pd(_mm256_sub_pd(v, vt), zero);
    __m256d lo = _mm256_min_pd(_mm256_add_pd(v, vt), zero);
    _mm256_storeu_pd(out + i, _mm256_add_pd(hi, lo));
  }
  for (; i < n; ++i) {
    const double v = x[i];
    out[i] = v > t ? v - t : (v < -t ? v + t : 0.0);
  }
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    const double* r0 = a + i * cols;
    const double* r1 = r0 + cols;
    const double* r2 = r1 + cols;
    const double* r3 = r2 + cols;
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d vx = _mm256_loadu_pd(x + j);
      s0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + j), vx, s0);
      s1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + j), vx, s1);
      s2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + j), vx, s2);
      s3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + j), vx, s3);
    }
    double t0 = hsum(s0), t1 = hsum(s1), t2 = hsum(s2), t3 = hsum(s3);
    for (; j < cols; ++j) {
      t0 += r0[j] * x[j];
      t1 += r1[j] * x[j];
      t2 += r2[j] * x[j];
      t3 += r3[j] * x[j];
    }
    y[i] = t0;
    y[i + 1] = t1;
    y[i + 2] = t2;
    y[i + 3] = t3;
  }
  for (; i < rows; ++i) y[i] = dot(a + i * cols, x, cols);
}

void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) axpy(x[i], a + i * cols, y, cols);
}

const Kernels kTable{"avx2", dot, sum_sq, sum_abs, axpy, lincomb, reflect, soft_threshold, gemv, gemv_t};

}  // namespace

const Kernels* avx2_table_impl() { return &kTable; }

}  // namespace fdr::simd
