// AVX2 + FMA kernel variants. This translation unit is the only one compiled
// with -mavx2 -mfma; it is reached only through the dispatch table, after the
// CPU check, so the binary stays runnable on plain x86-64.

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "entype/kernels.hpp"

namespace entype::kern::avx2 {

namespace {

float dot_f(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8)
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
  acc0 = _mm256_add_ps(acc0, acc1);
  __m128 lo = _mm256_castps256_ps128(acc0);
  __m128 hi = _mm256_extractf128_ps(acc0, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  float s = _mm_cvtss_f32(lo);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double dot_d(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  acc0 = _mm256_add_pd(acc0, acc1);
  __m128d lo = _mm256_castpd256_pd128(acc0);
  __m128d hi = _mm256_extractf128_pd(acc0, 1);
  lo = _mm_add_pd(lo, hi);
  double s = _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_f(float a, const float* x, float* y, std::size_t n) {
  __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_d(double a, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_f(float a, float* x, std::size_t n) {
  __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void scale_d(double a, double* x, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

// max(x, 0) with x as the first operand matches the scalar x > 0 ? x : 0
// exactly, signed zeros included.
void relu_f(const float* x, float* y, std::size_t n) {
  __m256 z = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), z));
  for (; i < n; ++i) y[i] = x[i] > 0 ? x[i] : 0.0f;
}

void relu_d(const double* x, double* y, std::size_t n) {
  __m256d z = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), z));
  for (; i < n; ++i) y[i] = x[i] > 0 ? x[i] : 0.0;
}

void relu_bw_f(const float* x, const float* g, float* gx, std::size_t n) {
  __m256 z = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), z, _CMP_GT_OQ);
    __m256 add = _mm256_and_ps(_mm256_loadu_ps(g + i), mask);
    _mm256_storeu_ps(gx + i, _mm256_add_ps(_mm256_loadu_ps(gx + i), add));
  }
  for (; i < n; ++i)
    if (x[i] > 0) gx[i] += g[i];
}

void relu_bw_d(const double* x, const double* g, double* gx, std::size_t n) {
  __m256d z = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), z, _CMP_GT_OQ);
    __m256d add = _mm256_and_pd(_mm256_loadu_pd(g + i), mask);
    _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), add));
  }
  for (; i < n; ++i)
    if (x[i] > 0) gx[i] += g[i];
}

void adagrad_f(float* v, float* g, float* acc, float lr, float eps, std::size_t n) {
  __m256 vlr = _mm256_set1_ps(lr);
  __m256 veps = _mm256_set1_ps(eps);
  __m256 z = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 gi = _mm256_loadu_ps(g + i);
    __m256 ai = _mm256_fmadd_ps(gi, gi, _mm256_loadu_ps(acc + i));
    _mm256_storeu_ps(acc + i, ai);
    __m256 den = _mm256_add_ps(_mm256_sqrt_ps(ai), veps);
    __m256 step = _mm256_div_ps(_mm256_mul_ps(vlr, gi), den);
    _mm256_storeu_ps(v + i, _mm256_sub_ps(_mm256_loadu_ps(v + i), step));
    _mm256_storeu_ps(g + i, z);
  }
  for (; i < n; ++i) {
    acc[i] += g[i] * g[i];
    v[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
    g[i] = 0;
  }
}

void adagrad_d(double* v, double* g, double* acc, double lr, double eps, std::size_t n) {
  __m256d vlr = _mm256_set1_pd(lr);
  __m256d veps = _mm256_set1_pd(eps);
  __m256d z = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gi = _mm256_loadu_pd(g + i);
    __m256d ai = _mm256_fmadd_pd(gi, gi, _mm256_loadu_pd(acc + i));
    _mm256_storeu_pd(acc + i, ai);
    __m256d den = _mm256_add_pd(_mm256_sqrt_pd(ai), veps);
    __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, gi), den);
    _mm256_storeu_pd(v + i, _mm256_sub_pd(_mm256_loadu_pd(v + i), step));
    _mm256_storeu_pd(g + i, z);
  }
  for (; i < n; ++i) {
    acc[i] += g[i] * g[i];
    v[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
    g[i] = 0;
  }
}

// First-occurrence argmax. Each lane keeps the earliest maximum of its own
// stride (strict-greater updates only); the horizontal reduce breaks value
// ties by smaller index, which is exactly the scalar rule because lane k
// covers indices k, k+8, ...
std::size_t argmax_f(const float* x, std::size_t n) {
  if (n < 16) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (x[i] > x[best]) best = i;
    return best;
  }
  __m256 vmax = _mm256_loadu_ps(x);
  __m256i vidx = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
  __m256i step = _mm256_set1_epi32(8);
  __m256i cur = vidx;
  std::size_t i = 8;
  for (; i + 8 <= n; i += 8) {
    cur = _mm256_add_epi32(cur, step);
    __m256 v = _mm256_loadu_ps(x + i);
    __m256 gt = _mm256_cmp_ps(v, vmax, _CMP_GT_OQ);
    vmax = _mm256_blendv_ps(vmax, v, gt);
    vidx = _mm256_blendv_epi8(vidx, cur, _mm256_castps_si256(gt));
  }
  alignas(32) float vals[8];
  alignas(32) std::int32_t idxs[8];
  _mm256_store_ps(vals, vmax);
  _mm256_store_si256(reinterpret_cast<__m256i*>(idxs), vidx);
  float best_v = vals[0];
  std::size_t best_i = static_cast<std::size_t>(idxs[0]);
  for (int k = 1; k < 8; ++k) {
    if (vals[k] > best_v || (vals[k] == best_v && static_cast<std::size_t>(idxs[k]) < best_i)) {
      best_v = vals[k];
      best_i = static_cast<std::size_t>(idxs[k]);
    }
  }
  for (; i < n; ++i)
    if (x[i] > best_v) {
      best_v = x[i];
      best_i = i;
    }
  return best_i;
}

std::size_t argmax_d(const double* x, std::size_t n) {
  if (n < 8) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (x[i] > x[best]) best = i;
    return best;
  }
  __m256d vmax = _mm256_loadu_pd(x);
  __m256i vidx = _mm256_setr_epi64x(0, 1, 2, 3);
  __m256i step = _mm256_set1_epi64x(4);
  __m256i cur = vidx;
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    cur = _mm256_add_epi64(cur, step);
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d gt = _mm256_cmp_pd(v, vmax, _CMP_GT_OQ);
    vmax = _mm256_blendv_pd(vmax, v, gt);
    vidx = _mm256_blendv_epi8(vidx, cur, _mm256_castpd_si256(gt));
  }
  alignas(32) double vals[4];
  alignas(32) std::int64_t idxs[4];
  _mm256_store_pd(vals, vmax);
  _mm256_store_si256(reinterpret_cast<__m256i*>(idxs), vidx);
  double best_v = vals[0];
  std::size_t best_i = static_cast<std::size_t>(idxs[0]);
  for (int k = 1; k < 4; ++k) {
    if (vals[k] > best_v || (vals[k] == best_v && static_cast<std::size_t>(idxs[k]) < best_i)) {
      best_v = vals[k];
      best_i = static_cast<std::size_t>(idxs[k]);
    }
  }
  for (; i < n; ++i)
    if (x[i] > best_v) {
      best_v = x[i];
      best_i = i;
    }
  return best_i;
}

}  // namespace

extern const Table<float> table_f = {dot_f,     axpy_f,    scale_f, relu_f,
                                     relu_bw_f, adagrad_f, argmax_f};
extern const Table<double> table_d = {dot_d,     axpy_d,    scale_d, relu_d,
                                      relu_bw_d, adagrad_d, argmax_d};

}  // namespace entype::kern::avx2
