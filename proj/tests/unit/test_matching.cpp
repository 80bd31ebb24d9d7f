#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "rilo/errors.hpp"
#include "rilo/matching.hpp"
#include "rilo/rng.hpp"
#include "support/builders.hpp"

using namespace rilo;

namespace {

Keypoint make_kp(const std::array<float, 128>& desc, double row = 0.0, double col = 0.0) {
  Keypoint kp;
  kp.row = row;
  kp.col = col;
  kp.descriptor = desc;
  return kp;
}

// Single-entry descriptor: value v in slot 0, zero elsewhere; keypoints then
// live on a line and L2 distances are plain |v1 - v2|.
Keypoint scalar_kp(float v, double col = 0.0) {
  std::array<float, 128> d{};
  d[0] = v;
  return make_kp(d, 0.0, col);
}

std::array<float, 128> random_unit_descriptor(std::mt19937_64& rng) {
  std::array<float, 128> d{};
  double norm2 = 0.0;
  for (auto& v : d) {
    v = static_cast<float>(uniform_real(rng, 0.0, 1.0));
    norm2 += double(v) * double(v);
  }
  const float inv = static_cast<float>(1.0 / std::sqrt(norm2));
  for (auto& v : d) v *= inv;
  return d;
}

}  // namespace

TEST_SUITE("matching") {
  TEST_CASE("empty inputs give empty output") {
    CHECK(match_descriptors({}, {}).empty());
    CHECK(match_descriptors({scalar_kp(1.0f)}, {}).empty());
    CHECK(match_descriptors({}, {scalar_kp(1.0f)}).empty());
  }

  TEST_CASE("a list matched against itself is the identity at distance zero") {
    auto rng = seeded_engine(80);
    std::vector<Keypoint> kps;
    for (int i = 0; i < 20; ++i) kps.push_back(make_kp(random_unit_descriptor(rng)));
    const auto matches = match_descriptors(kps, kps);
    REQUIRE(matches.size() == 20);
    for (const auto& m : matches) {
      CHECK(m.index_a == m.index_b);
      CHECK(m.distance == 0.0);
    }
  }

  TEST_CASE("the ratio test drops ambiguous candidates") {
    const std::vector<Keypoint> a = {scalar_kp(0.0f)};
    // two candidates at distances 1.0 and 1.1: ratio 0.91 > 0.8, ambiguous
    CHECK(match_descriptors(a, {scalar_kp(1.0f), scalar_kp(1.1f)}).empty());
    // distances 1.0 and 2.0: ratio 0.5, decisive
    const auto ok = match_descriptors(a, {scalar_kp(1.0f), scalar_kp(2.0f)});
    REQUIRE(ok.size() == 1);
    CHECK(ok[0].index_b == 0);
    CHECK(ok[0].distance == doctest::Approx(1.0));
  }

  TEST_CASE("mutual agreement is required only when asked") {
    // b0 sits between a0 and a1 but closer to a1, so a0 -> b0 is one-sided
    const std::vector<Keypoint> a = {scalar_kp(0.0f), scalar_kp(0.9f)};
    const std::vector<Keypoint> b = {scalar_kp(0.5f)};
    MatchParams mp;
    mp.mutual = true;
    auto matches = match_descriptors(a, b, mp);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].index_a == 1);

    mp.mutual = false;
    matches = match_descriptors(a, b, mp);
    CHECK(matches.size() == 2);
  }

  TEST_CASE("matches come back sorted by distance") {
    const std::vector<Keypoint> a = {scalar_kp(0.0f), scalar_kp(10.0f), scalar_kp(20.0f)};
    const std::vector<Keypoint> b = {scalar_kp(0.3f), scalar_kp(10.2f), scalar_kp(20.1f)};
    const auto matches = match_descriptors(a, b);
    REQUIRE(matches.size() == 3);
    for (std::size_t i = 1; i < matches.size(); ++i)
      CHECK(matches[i - 1].distance <= matches[i].distance);
    CHECK(matches[0].index_a == 2);  // 0.1 beats 0.2 beats 0.3
  }

  TEST_CASE("the cyclic column gate measures displacement around the seam") {
    MatchParams mp;
    mp.max_col_displacement = 10;
    mp.image_width = 100;
    // same descriptors, columns 95 and 2: cyclic displacement 7, kept
    auto matches =
        match_descriptors({scalar_kp(1.0f, 95.0)}, {scalar_kp(1.0f, 2.0)}, mp);
    CHECK(matches.size() == 1);
    // columns 30 and 80: displacement 50, dropped
    matches = match_descriptors({scalar_kp(1.0f, 30.0)}, {scalar_kp(1.0f, 80.0)}, mp);
    CHECK(matches.empty());
  }

  TEST_CASE("perturbed descriptors still match their shuffled originals") {
    auto rng = seeded_engine(81);
    std::vector<Keypoint> a;
    for (int i = 0; i < 100; ++i) a.push_back(make_kp(random_unit_descriptor(rng)));

    std::vector<int> perm(100);
    for (int i = 0; i < 100; ++i) perm[i] = i;
    shuffle_vector(perm, rng);

    std::vector<Keypoint> b(100);
    for (int i = 0; i < 100; ++i) {
      Keypoint kp = a[i];
      double norm2 = 0.0;
      for (auto& v : kp.descriptor) {
        v += static_cast<float>(uniform_real(rng, -0.01, 0.01));
        norm2 += double(v) * double(v);
      }
      for (auto& v : kp.descriptor) v = static_cast<float>(v / std::sqrt(norm2));
      b[perm[i]] = kp;
    }

    const auto matches = match_descriptors(a, b);
    int correct = 0;
    for (const auto& m : matches) correct += (perm[m.index_a] == m.index_b) ? 1 : 0;
    CHECK(correct >= 95);
  }

  TEST_CASE("extract_mkps on identical frames pairs each point with itself") {
    const SceneSpec spec = build::clutter_scene(90);
    const auto frame = build::render_frame(spec, 90, Pose::identity());
    const MKPSet set = extract_mkps(frame->inputs(), frame->inputs(), 500);
    REQUIRE(set.size() > 30);
    CHECK_NOTHROW(set.validate());
    CHECK(!set.weights.has_value());
    CHECK(!set.labels.has_value());
    for (Eigen::Index k = 0; k < set.size(); ++k)
      CHECK(set.left(k) == set.right(k));  // same stored point, bit-identical
  }

  TEST_CASE("extract_mkps respects the cap and reports the shortfall") {
    const SceneSpec spec = build::clutter_scene(91);
    const auto frame = build::render_frame(spec, 91, Pose::identity());
    int shortfall = -1;
    const MKPSet all = extract_mkps(frame->inputs(), frame->inputs(), 100000, {}, {}, &shortfall);
    CHECK(shortfall == 100000 - static_cast<int>(all.size()));

    const MKPSet capped = extract_mkps(frame->inputs(), frame->inputs(), 10);
    CHECK(capped.size() == 10);
    // the cap keeps the strongest matches: identical to the head of the full set
    CHECK(capped.pairs == all.pairs.topRows(10));
  }

  TEST_CASE("extract_mkps pairs track a known rigid motion") {
    const SceneSpec spec = build::clutter_scene(92, 80);
    const Pose sensor_b = make_yaw(0.2 * M_PI / 180.0, {0.3, 0.0, 0.0});
    const auto fa = build::render_frame(spec, 92, Pose::identity());
    const auto fb = build::render_frame(spec, 92, sensor_b);
    // a static world point X appears as X in frame a and as inv(sensor_b)(X)
    // in frame b, so the a->b map is inv(sensor_b)
    const Pose gt = inverse(sensor_b);
    const MKPSet set = extract_mkps(fa->inputs(), fb->inputs(), 500);
    REQUIRE(set.size() > 50);
    int close = 0;
    for (Eigen::Index k = 0; k < set.size(); ++k)
      close += (apply(gt, set.left(k)) - set.right(k)).norm() < 0.1 ? 1 : 0;
    CHECK(double(close) >= 0.8 * double(set.size()));
  }

  TEST_CASE("textureless frames are a reported failure, not a crash") {
    // constant-depth image: completion keeps it constant, equalization flat
    build::Frame frame;
    const int H = 32, W = 64;
    frame.image.H = H;
    frame.image.W = W;
    frame.image.depth.assign(H * W, 10.0);
    frame.image.valid.assign(H * W, 1);
    frame.image.index_map.assign(H * W, 0);
    frame.cloud.push_back(10.0, 0.0, 0.0);
    frame.equalized.H = H;
    frame.equalized.W = W;
    frame.equalized.gray.assign(H * W, 128);
    frame.equalized.source = &frame.image;
    CHECK_THROWS_AS(extract_mkps(frame.inputs(), frame.inputs(), 100), DegenerateFramePair);
  }
}
