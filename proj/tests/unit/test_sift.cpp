#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "rilo/matching.hpp"
#include "rilo/projection.hpp"
#include "rilo/rng.hpp"
#include "rilo/sift.hpp"
#include "rilo/synth.hpp"

using namespace rilo;

namespace {

EqualizedImage flat_image(int H, int W, std::uint8_t level) {
  EqualizedImage img;
  img.H = H;
  img.W = W;
  img.gray.assign(static_cast<std::size_t>(H) * W, level);
  return img;
}

// Square blob of side 2*half+1 around (r0, c0), columns wrapping.
void stamp_blob(EqualizedImage& img, int r0, int c0, int half, std::uint8_t level) {
  for (int dr = -half; dr <= half; ++dr)
    for (int dc = -half; dc <= half; ++dc) {
      const int r = r0 + dr;
      const int c = ((c0 + dc) % img.W + img.W) % img.W;
      if (r >= 0 && r < img.H) img.gray[img.idx(r, c)] = level;
    }
}

// Equalized view of a cluttered synthetic scene: textured enough that the
// detector finds dozens of corners.
EqualizedImage scene_image(SphericalImage& storage, std::uint64_t seed) {
  SceneSpec spec;
  spec.scanner.rings = 64;
  spec.scanner.azimuth_steps = 512;
  spec.scanner.elev_min = -30.0 * M_PI / 180.0;
  spec.scanner.elev_max = 10.0 * M_PI / 180.0;
  PlaneSpec ground;
  ground.z = -1.7;
  spec.planes.push_back(ground);
  auto rng = seeded_engine(seed, 5);
  for (int k = 0; k < 60; ++k) {
    BoxSpec box;
    const double ang = uniform_real(rng, -M_PI, M_PI);
    const double dist = uniform_real(rng, 4.0, 18.0);
    box.center = {dist * std::cos(ang), dist * std::sin(ang),
                  uniform_real(rng, -1.2, 0.5)};
    box.size = {uniform_real(rng, 0.5, 2.5), uniform_real(rng, 0.5, 2.5),
                uniform_real(rng, 0.5, 3.0)};
    box.yaw = uniform_real(rng, 0, M_PI);
    spec.boxes.push_back(box);
  }
  const PointCloud cloud = synth_scene(seed, spec);
  ProjectionConfig cfg;
  cfg.H = 64;
  cfg.W = 512;
  cfg.elev_min = spec.scanner.elev_min;
  cfg.elev_max = spec.scanner.elev_max;
  storage = depth_completion(project(cloud, cfg));
  return histogram_equalize(storage, cfg);
}

EqualizedImage shift_columns(const EqualizedImage& src, int shift) {
  EqualizedImage out = src;
  for (int r = 0; r < src.H; ++r)
    for (int c = 0; c < src.W; ++c)
      out.gray[out.idx(r, (c + shift) % src.W)] = src.gray[src.idx(r, c)];
  return out;
}

}  // namespace

TEST_SUITE("sift") {
  TEST_CASE("a constant image has no scale-space extrema") {
    CHECK(detect_and_describe(flat_image(64, 128, 0)).empty());
    CHECK(detect_and_describe(flat_image(64, 128, 128)).empty());
    CHECK(detect_and_describe(flat_image(64, 128, 255)).empty());
  }

  TEST_CASE("images below the pyramid minimum are rejected") {
    CHECK_THROWS_AS(detect_and_describe(flat_image(8, 64, 0)), std::invalid_argument);
    CHECK_THROWS_AS(detect_and_describe(flat_image(64, 8, 0)), std::invalid_argument);
  }

  TEST_CASE("an isolated bright blob is localized within two pixels") {
    EqualizedImage img = flat_image(64, 64, 64);
    stamp_blob(img, 32, 40, 2, 200);
    const auto kps = detect_and_describe(img);
    REQUIRE(!kps.empty());
    bool near = false;
    for (const auto& kp : kps) {
      if (std::abs(kp.row - 32.0) <= 2.0 && std::abs(kp.col - 40.0) <= 2.0) near = true;
    }
    CHECK(near);
  }

  TEST_CASE("a blob straddling the azimuth seam is still found") {
    EqualizedImage img = flat_image(64, 96, 64);
    stamp_blob(img, 20, 0, 2, 220);  // wraps across columns 94..2
    const auto kps = detect_and_describe(img);
    bool near = false;
    for (const auto& kp : kps) {
      double dc = std::abs(kp.col - 0.0);
      dc = std::min(dc, 96.0 - dc);  // cyclic distance to the seam
      if (std::abs(kp.row - 20.0) <= 2.0 && dc <= 2.0) near = true;
    }
    CHECK(near);
  }

  TEST_CASE("descriptors come out L2 normalized") {
    SphericalImage storage;
    const EqualizedImage img = scene_image(storage, 1);
    const auto kps = detect_and_describe(img);
    REQUIRE(kps.size() > 20);
    for (const auto& kp : kps) {
      double norm2 = 0.0;
      for (const float v : kp.descriptor) {
        norm2 += double(v) * double(v);
        CHECK(v >= 0.0f);  // gradient histograms are nonnegative
      }
      CHECK(std::sqrt(norm2) == doctest::Approx(1.0).epsilon(1e-4));
    }
  }

  TEST_CASE("detection is deterministic and sorted") {
    SphericalImage storage;
    const EqualizedImage img = scene_image(storage, 2);
    const auto a = detect_and_describe(img);
    const auto b = detect_and_describe(img);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].row == b[i].row);
      CHECK(a[i].col == b[i].col);
      CHECK(a[i].scale == b[i].scale);
      CHECK(a[i].orientation == b[i].orientation);
      CHECK(a[i].descriptor == b[i].descriptor);
    }
    for (std::size_t i = 1; i < a.size(); ++i) {
      const auto key = [](const Keypoint& k) {
        return std::make_tuple(k.row, k.col, k.scale, k.orientation);
      };
      CHECK(key(a[i - 1]) <= key(a[i]));
    }
  }

  TEST_CASE("keypoints on a circularly shifted image move by the shift") {
    SphericalImage storage;
    const EqualizedImage img = scene_image(storage, 3);
    const int shift = 50;
    const EqualizedImage moved = shift_columns(img, shift);

    const auto kp_a = detect_and_describe(img);
    const auto kp_b = detect_and_describe(moved);
    REQUIRE(kp_a.size() > 30);

    MatchParams mp;
    const auto matches = match_descriptors(kp_a, kp_b, mp);
    REQUIRE(matches.size() >= 20);
    int within_one = 0;
    for (const auto& m : matches) {
      double dc = kp_b[m.index_b].col - kp_a[m.index_a].col - shift;
      dc = dc - std::round(dc / img.W) * img.W;  // wrap to [-W/2, W/2)
      if (std::abs(dc) <= 1.0) ++within_one;
    }
    // the detector re-finds at least 90 percent of matched keypoints at the
    // translated position
    CHECK(double(within_one) >= 0.9 * double(matches.size()));
  }
}
