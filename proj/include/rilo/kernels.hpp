#pragma once

#include <cstddef>
#include <string>

namespace rilo::kernels {

enum class Backend { Scalar, Avx2 };

// Function table for the data-parallel inner loops (pyramid convolutions,
// descriptor distances, batched rigid transforms). Every entry has a scalar
// reference implementation; wider variants must agree with it within the
// tolerances asserted by the equivalence tests.
struct Kernels {
  // Sum of squared differences of two 128-float descriptors.
  float (*l2sq128)(const float* a, const float* b);

  // dist[j] = l2sq128(query, base + 128*j) for j in [0, n).
  void (*l2sq128_batch)(const float* query, const float* base, std::size_t n,
                        float* dist);

  // "Valid" 1-D convolution: dst[i] = sum_k taps[k] * src_padded[i + k],
  // k in [0, 2*radius], i in [0, n). The caller builds the halo, so one
  // kernel serves both replicated and cyclic borders.
  void (*conv_row_valid)(const float* src_padded, float* dst, std::size_t n,
                         const float* taps, int radius);

  // Vertical convolution over a row-major rows x stride image with row
  // clamping at the top/bottom edges; all stride columns are filtered.
  void (*conv_col_clamp)(const float* src, float* dst, std::size_t rows,
                         std::size_t stride, const float* taps, int radius);

  // out[i] = sqrt(x[i]^2 + y[i]^2 + z[i]^2)
  void (*range3)(const double* x, const double* y, const double* z,
                 std::size_t n, double* out);

  // Rigid transform over SoA points: (ox,oy,oz)[i] = R*(x,y,z)[i] + t.
  // R is row-major 3x3, t a 3-vector. In-place (ox == x, ...) is allowed.
  void (*transform3)(const double* R, const double* t, const double* x,
                     const double* y, const double* z, std::size_t n,
                     double* ox, double* oy, double* oz);
};

// Reference table, always available.
const Kernels& scalar();

// AVX2+FMA table, or nullptr when this build/CPU cannot run it.
const Kernels* avx2();

// Table selected at startup: best supported backend, overridable by the
// RILO_KERNELS environment variable ("scalar" or "avx2") or set_backend().
const Kernels& active();

// Force a backend; throws std::runtime_error if it is not available.
void set_backend(Backend b);

// Currently selected backend (useful for saving/restoring around comparisons).
Backend active_backend();

std::string active_name();

}  // namespace rilo::kernels
