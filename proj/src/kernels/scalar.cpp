#include "rilo/kernels.hpp"

#include <cmath>

namespace rilo::kernels {
namespace {

float l2sq128_scalar(const float* a, const float* b) {
  float acc = 0.0f;
  for (int i = 0; i < 128; ++i) {
    const float d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void l2sq128_batch_scalar(const float* query, const float* base, std::size_t n,
                          float* dist) {
  for (std::size_t j = 0; j < n; ++j)
    dist[j] = l2sq128_scalar(query, base + 128 * j);
}

void conv_row_valid_scalar(const float* src, float* dst, std::size_t n,
                           const float* taps, int radius) {
  const int len = 2 * radius + 1;
  for (std::size_t i = 0; i < n; ++i) {
    float acc = 0.0f;
    for (int k = 0; k < len; ++k) acc += taps[k] * src[i + k];
    dst[i] = acc;
  }
}

void conv_col_clamp_scalar(const float* src, float* dst, std::size_t rows,
                           std::size_t stride, const float* taps, int radius) {
  const int len = 2 * radius + 1;
  const int last = static_cast<int>(rows) - 1;
  for (int r = 0; r < static_cast<int>(rows); ++r) {
    for (std::size_t c = 0; c < stride; ++c) {
      float acc = 0.0f;
      for (int k = 0; k < len; ++k) {
        int rr = r + k - radius;
        if (rr < 0) rr = 0;
        if (rr > last) rr = last;
        acc += taps[k] * src[static_cast<std::size_t>(rr) * stride + c];
      }
      dst[static_cast<std::size_t>(r) * stride + c] = acc;
    }
  }
}

void range3_scalar(const double* x, const double* y, const double* z,
                   std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
}

void transform3_scalar(const double* R, const double* t, const double* x,
                       const double* y, const double* z, std::size_t n,
                       double* ox, double* oy, double* oz) {
  for (std::size_t i = 0; i < n; ++i) {
    const double px = x[i], py = y[i], pz = z[i];
    ox[i] = R[0] * px + R[1] * py + R[2] * pz + t[0];
    oy[i] = R[3] * px + R[4] * py + R[5] * pz + t[1];
    oz[i] = R[6] * px + R[7] * py + R[8] * pz + t[2];
  }
}

}  // namespace

const Kernels& scalar() {
  static const Kernels k{l2sq128_scalar,      l2sq128_batch_scalar,
                         conv_row_valid_scalar, conv_col_clamp_scalar,
                         range3_scalar,       transform3_scalar};
  return k;
}

}  // namespace rilo::kernels
