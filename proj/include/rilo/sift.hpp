#pragma once

#include <array>
#include <vector>

#include "rilo/projection.hpp"

namespace rilo {

// Difference-of-Gaussians detector settings. Defaults are the classic SIFT
// choices with the octave count trimmed for short (64-row) range images.
struct SiftParams {
  int octaves = 3;
  int scales_per_octave = 3;       // sampled scales s; 5 DoG levels per octave
  double sigma0 = 1.6;             // blur of pyramid level 0
  double assumed_blur = 0.5;       // blur already present in the input
  double contrast_threshold = 0.03;  // on DoG values of a [0,1] image
  double edge_ratio = 10.0;        // max principal-curvature ratio
  double peak_ratio = 0.8;         // secondary orientation peaks vs the max
  int max_refine_steps = 5;        // sub-pixel interpolation moves
};

struct Keypoint {
  double row = 0.0;           // sub-pixel, in input-image coordinates
  double col = 0.0;
  double scale = 1.0;         // absolute blur sigma in input-image pixels
  double orientation = 0.0;   // radians in [-pi, pi)
  float response = 0.0f;      // |interpolated DoG value|
  std::array<float, 128> descriptor{};  // 4x4x8 gradient histogram, L2 = 1
};

// Detects scale-space extrema on the equalized depth image and attaches
// oriented 128-d descriptors. The image is treated as horizontally periodic
// (a full-circle scan), so columns wrap at every stage and keypoints near the
// seam survive; rows clamp. Deterministic: output is sorted by
// (row, col, scale, orientation). Throws std::invalid_argument below 16x16.
std::vector<Keypoint> detect_and_describe(const EqualizedImage& image,
                                          const SiftParams& params = {});

}  // namespace rilo
