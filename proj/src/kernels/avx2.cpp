// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma and must only be entered through the dispatch table after a
// runtime CPU check.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>

#include "rilo/kernels.hpp"

namespace rilo::kernels {
namespace {

inline float hsum256(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

float l2sq128_avx2(const float* a, const float* b) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  for (int i = 0; i < 128; i += 16) {
    __m256 d0 = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    __m256 d1 =
        _mm256_sub_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8));
    acc0 = _mm256_fmadd_ps(d0, d0, acc0);
    acc1 = _mm256_fmadd_ps(d1, d1, acc1);
  }
  return hsum256(_mm256_add_ps(acc0, acc1));
}

void l2sq128_batch_avx2(const float* query, const float* base, std::size_t n,
                        float* dist) {
  for (std::size_t j = 0; j < n; ++j)
    dist[j] = l2sq128_avx2(query, base + 128 * j);
}

void conv_row_valid_avx2(const float* src, float* dst, std::size_t n,
                         const float* taps, int radius) {
  const int len = 2 * radius + 1;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 acc = _mm256_setzero_ps();
    for (int k = 0; k < len; ++k)
      acc = _mm256_fmadd_ps(_mm256_set1_ps(taps[k]),
                            _mm256_loadu_ps(src + i + k), acc);
    _mm256_storeu_ps(dst + i, acc);
  }
  for (; i < n; ++i) {
    float acc = 0.0f;
    for (int k = 0; k < len; ++k) acc += taps[k] * src[i + k];
    dst[i] = acc;
  }
}

void conv_col_clamp_avx2(const float* src, float* dst, std::size_t rows,
                         std::size_t stride, const float* taps, int radius) {
  const int len = 2 * radius + 1;
  const int last = static_cast<int>(rows) - 1;
  for (int r = 0; r < static_cast<int>(rows); ++r) {
    float* out = dst + static_cast<std::size_t>(r) * stride;
    std::size_t c = 0;
    for (; c + 8 <= stride; c += 8) {
      __m256 acc = _mm256_setzero_ps();
      for (int k = 0; k < len; ++k) {
        int rr = r + k - radius;
        if (rr < 0) rr = 0;
        if (rr > last) rr = last;
        const float* row = src + static_cast<std::size_t>(rr) * stride;
        acc = _mm256_fmadd_ps(_mm256_set1_ps(taps[k]),
                              _mm256_loadu_ps(row + c), acc);
      }
      _mm256_storeu_ps(out + c, acc);
    }
    for (; c < stride; ++c) {
      float acc = 0.0f;
      for (int k = 0; k < len; ++k) {
        int rr = r + k - radius;
        if (rr < 0) rr = 0;
        if (rr > last) rr = last;
        acc += taps[k] * src[static_cast<std::size_t>(rr) * stride + c];
      }
      out[c] = acc;
    }
  }
}

void range3_avx2(const double* x, const double* y, const double* z,
                 std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d vz = _mm256_loadu_pd(z + i);
    __m256d s = _mm256_mul_pd(vx, vx);
    s = _mm256_fmadd_pd(vy, vy, s);
    s = _mm256_fmadd_pd(vz, vz, s);
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(s));
  }
  for (; i < n; ++i) out[i] = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
}

void transform3_avx2(const double* R, const double* t, const double* x,
                     const double* y, const double* z, std::size_t n,
                     double* ox, double* oy, double* oz) {
  const __m256d r00 = _mm256_set1_pd(R[0]), r01 = _mm256_set1_pd(R[1]),
                r02 = _mm256_set1_pd(R[2]), r10 = _mm256_set1_pd(R[3]),
                r11 = _mm256_set1_pd(R[4]), r12 = _mm256_set1_pd(R[5]),
                r20 = _mm256_set1_pd(R[6]), r21 = _mm256_set1_pd(R[7]),
                r22 = _mm256_set1_pd(R[8]);
  const __m256d t0 = _mm256_set1_pd(t[0]), t1 = _mm256_set1_pd(t[1]),
                t2 = _mm256_set1_pd(t[2]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d vz = _mm256_loadu_pd(z + i);
    __m256d a = _mm256_fmadd_pd(r00, vx, t0);
    a = _mm256_fmadd_pd(r01, vy, a);
    a = _mm256_fmadd_pd(r02, vz, a);
    __m256d b = _mm256_fmadd_pd(r10, vx, t1);
    b = _mm256_fmadd_pd(r11, vy, b);
    b = _mm256_fmadd_pd(r12, vz, b);
    __m256d c = _mm256_fmadd_pd(r20, vx, t2);
    c = _mm256_fmadd_pd(r21, vy, c);
    c = _mm256_fmadd_pd(r22, vz, c);
    _mm256_storeu_pd(ox + i, a);
    _mm256_storeu_pd(oy + i, b);
    _mm256_storeu_pd(oz + i, c);
  }
  for (; i < n; ++i) {
    const double px = x[i], py = y[i], pz = z[i];
    ox[i] = R[0] * px + R[1] * py + R[2] * pz + t[0];
    oy[i] = R[3] * px + R[4] * py + R[5] * pz + t[1];
    oz[i] = R[6] * px + R[7] * py + R[8] * pz + t[2];
  }
}

}  // namespace

const Kernels* avx2() {
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma"))
    return nullptr;
  static const Kernels k{l2sq128_avx2,      l2sq128_batch_avx2,
                         conv_row_valid_avx2, conv_col_clamp_avx2,
                         range3_avx2,       transform3_avx2};
  return &k;
}

}  // namespace rilo::kernels

#else

#include "rilo/kernels.hpp"

namespace rilo::kernels {
const Kernels* avx2() { return nullptr; }
}  // namespace rilo::kernels

#endif
