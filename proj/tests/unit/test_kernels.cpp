#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "rilo/kernels.hpp"
#include "rilo/rng.hpp"

using namespace rilo;

namespace {

std::vector<float> random_floats(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(uniform_real(rng, lo, hi));
  return v;
}

std::vector<double> random_doubles(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform_real(rng, lo, hi);
  return v;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar table computes the documented formulas") {
    const kernels::Kernels& k = kernels::scalar();

    SUBCASE("l2sq128 on a simple pattern") {
      std::vector<float> a(128, 0.0f), b(128, 0.0f);
      a[0] = 3.0f;
      b[0] = 1.0f;  // contributes 4
      a[127] = 1.0f;  // contributes 1
      CHECK(k.l2sq128(a.data(), b.data()) == doctest::Approx(5.0f).epsilon(1e-6));
      CHECK(k.l2sq128(a.data(), a.data()) == 0.0f);
    }

    SUBCASE("batch distances equal per-query calls") {
      auto rng = seeded_engine(60);
      const auto q = random_floats(rng, 128, -1, 1);
      const auto base = random_floats(rng, 128 * 17, -1, 1);
      std::vector<float> dist(17);
      k.l2sq128_batch(q.data(), base.data(), 17, dist.data());
      for (std::size_t j = 0; j < 17; ++j)
        CHECK(dist[j] == doctest::Approx(k.l2sq128(q.data(), base.data() + 128 * j))
                             .epsilon(1e-6));
    }

    SUBCASE("row convolution against a direct loop") {
      auto rng = seeded_engine(61);
      const int radius = 2;
      const std::size_t n = 33;
      const auto src = random_floats(rng, n + 2 * radius, -2, 2);
      const auto taps = random_floats(rng, 2 * radius + 1, -1, 1);
      std::vector<float> dst(n);
      k.conv_row_valid(src.data(), dst.data(), n, taps.data(), radius);
      for (std::size_t i = 0; i < n; ++i) {
        double ref = 0.0;
        for (int t = 0; t <= 2 * radius; ++t) ref += double(taps[t]) * double(src[i + t]);
        CHECK(dst[i] == doctest::Approx(ref).epsilon(1e-5));
      }
    }

    SUBCASE("column convolution clamps at the image border") {
      auto rng = seeded_engine(62);
      const int radius = 1;
      const std::size_t rows = 5, stride = 9;
      const auto src = random_floats(rng, rows * stride, -2, 2);
      const auto taps = random_floats(rng, 2 * radius + 1, -1, 1);
      std::vector<float> dst(rows * stride);
      k.conv_col_clamp(src.data(), dst.data(), rows, stride, taps.data(), radius);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < stride; ++c) {
          double ref = 0.0;
          for (int t = -radius; t <= radius; ++t) {
            const std::size_t rr =
                static_cast<std::size_t>(std::clamp<long>(long(r) + t, 0, long(rows) - 1));
            ref += double(taps[t + radius]) * double(src[rr * stride + c]);
          }
          CHECK(dst[r * stride + c] == doctest::Approx(ref).epsilon(1e-5));
        }
    }

    SUBCASE("range3 is the Euclidean norm") {
      const double x[] = {3, 0, 1}, y[] = {4, 0, 2}, z[] = {0, 0, 2};
      double out[3];
      k.range3(x, y, z, 3, out);
      CHECK(out[0] == doctest::Approx(5.0));
      CHECK(out[1] == 0.0);
      CHECK(out[2] == doctest::Approx(3.0));
    }

    SUBCASE("transform3 applies R x + t, in place allowed") {
      // 90-degree yaw: (1,0,0) -> (0,1,0)
      const double R[9] = {0, -1, 0, 1, 0, 0, 0, 0, 1};
      const double t[3] = {10, 20, 30};
      double x[] = {1, 0}, y[] = {0, 1}, z[] = {0, 0};
      k.transform3(R, t, x, y, z, 2, x, y, z);
      CHECK(x[0] == doctest::Approx(10.0).epsilon(1e-12));
      CHECK(y[0] == doctest::Approx(21.0).epsilon(1e-12));
      CHECK(z[0] == doctest::Approx(30.0).epsilon(1e-12));
      CHECK(x[1] == doctest::Approx(9.0).epsilon(1e-12));
      CHECK(y[1] == doctest::Approx(20.0).epsilon(1e-12));
    }
  }

  TEST_CASE("vector backend agrees with the scalar reference") {
    const kernels::Kernels* wide = kernels::avx2();
    if (!wide) {
      MESSAGE("AVX2 backend unavailable on this machine; equivalence skipped");
      return;
    }
    const kernels::Kernels& ref = kernels::scalar();
    auto rng = seeded_engine(63);

    SUBCASE("l2sq128 and batches") {
      for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_floats(rng, 128, -3, 3);
        const auto b = random_floats(rng, 128, -3, 3);
        const float r = ref.l2sq128(a.data(), b.data());
        const float w = wide->l2sq128(a.data(), b.data());
        CHECK(w == doctest::Approx(r).epsilon(1e-5));
      }
      // odd batch length exercises the remainder loop
      const auto q = random_floats(rng, 128, -1, 1);
      const auto base = random_floats(rng, 128 * 23, -1, 1);
      std::vector<float> dr(23), dw(23);
      ref.l2sq128_batch(q.data(), base.data(), 23, dr.data());
      wide->l2sq128_batch(q.data(), base.data(), 23, dw.data());
      for (int j = 0; j < 23; ++j) CHECK(dw[j] == doctest::Approx(dr[j]).epsilon(1e-5));
    }

    SUBCASE("convolutions across lengths that straddle the vector width") {
      for (std::size_t n : {1, 7, 8, 9, 31, 64, 101}) {
        for (int radius : {1, 2, 4}) {
          const auto src = random_floats(rng, n + 2 * radius, -2, 2);
          const auto taps = random_floats(rng, 2 * radius + 1, -1, 1);
          std::vector<float> dr(n), dw(n);
          ref.conv_row_valid(src.data(), dr.data(), n, taps.data(), radius);
          wide->conv_row_valid(src.data(), dw.data(), n, taps.data(), radius);
          for (std::size_t i = 0; i < n; ++i)
            CHECK(dw[i] == doctest::Approx(dr[i]).epsilon(1e-5));
        }
      }
      const std::size_t rows = 6, stride = 37;
      const auto img = random_floats(rng, rows * stride, -2, 2);
      const auto taps = random_floats(rng, 5, -1, 1);
      std::vector<float> dr(rows * stride), dw(rows * stride);
      ref.conv_col_clamp(img.data(), dr.data(), rows, stride, taps.data(), 2);
      wide->conv_col_clamp(img.data(), dw.data(), rows, stride, taps.data(), 2);
      for (std::size_t i = 0; i < rows * stride; ++i)
        CHECK(dw[i] == doctest::Approx(dr[i]).epsilon(1e-5));
    }

    SUBCASE("double-precision point kernels, remainder lanes included") {
      for (std::size_t n : {1, 3, 4, 5, 128, 1001}) {
        const auto x = random_doubles(rng, n, -50, 50);
        const auto y = random_doubles(rng, n, -50, 50);
        const auto z = random_doubles(rng, n, -50, 50);
        std::vector<double> rr(n), rw(n);
        ref.range3(x.data(), y.data(), z.data(), n, rr.data());
        wide->range3(x.data(), y.data(), z.data(), n, rw.data());
        for (std::size_t i = 0; i < n; ++i)
          CHECK(rw[i] == doctest::Approx(rr[i]).epsilon(1e-12));

        const double R[9] = {0.936, -0.275, 0.218, 0.289, 0.957, -0.033, -0.2, 0.094, 0.975};
        const double t[3] = {0.4, -1.2, 0.01};
        std::vector<double> ax = x, ay = y, az = z, bx = x, by = y, bz = z;
        ref.transform3(R, t, ax.data(), ay.data(), az.data(), n, ax.data(), ay.data(),
                       az.data());
        wide->transform3(R, t, bx.data(), by.data(), bz.data(), n, bx.data(), by.data(),
                         bz.data());
        for (std::size_t i = 0; i < n; ++i) {
          CHECK(bx[i] == doctest::Approx(ax[i]).epsilon(1e-12));
          CHECK(by[i] == doctest::Approx(ay[i]).epsilon(1e-12));
          CHECK(bz[i] == doctest::Approx(az[i]).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("backend selection is explicit and reversible") {
    const kernels::Backend before = kernels::active_backend();
    kernels::set_backend(kernels::Backend::Scalar);
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    CHECK(kernels::active_name() == "scalar");
    CHECK(&kernels::active() == &kernels::scalar());
    if (kernels::avx2()) {
      kernels::set_backend(kernels::Backend::Avx2);
      CHECK(kernels::active_name() == "avx2");
      CHECK(&kernels::active() == kernels::avx2());
    }
    kernels::set_backend(before);
  }
}
