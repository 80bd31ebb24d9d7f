#pragma once

#include <vector>

#include "rilo/mkp.hpp"
#include "rilo/point_cloud.hpp"
#include "rilo/sift.hpp"

namespace rilo {

struct Match {
  int index_a = 0;
  int index_b = 0;
  double distance = 0.0;  // L2 between descriptors
};

struct MatchParams {
  double ratio = 0.8;             // Lowe ratio: best / second-best
  bool mutual = true;             // require nearest-neighbor agreement both ways
  int max_col_displacement = -1;  // cyclic column gate between matched
                                  // keypoints; < 0 disables (the default)
  int image_width = 0;            // needed only when the gate is enabled

  // Depth-patch alignment of matched pixels (used by extract_mkps): the
  // later frame's pixel is snapped to the offset whose surrounding completed
  // depth patch correlates best with the earlier frame's patch. Detector
  // blobs drift by a pixel or two between frames; correlation over the full
  // patch relocalizes far more repeatably than the blob center alone.
  bool refine = true;
  int refine_window = 4;  // patch half-width; the patch is (2w+1) x (2w+1)
  int refine_cols = 4;    // column search radius (cyclic)
  int refine_rows = 2;    // row search radius
};

// Mutual nearest neighbors under descriptor L2 distance, filtered by the
// ratio test (applied on the a-side; vacuous with fewer than two candidates).
// Sorted ascending by distance, then by index. Empty input gives empty output.
std::vector<Match> match_descriptors(const std::vector<Keypoint>& a,
                                     const std::vector<Keypoint>& b,
                                     const MatchParams& params = {});

// One frame's worth of inputs for MKP extraction. `image` may be the
// depth-completed image: completion keeps the original validity mask and
// index map, which is exactly what the fake-keypoint filter needs.
struct FrameInputs {
  const SphericalImage* image = nullptr;
  const EqualizedImage* equalized = nullptr;
  const PointCloud* cloud = nullptr;
};

// Full per-pair front end: detect on both equalized images, match, drop
// matches whose rounded pixel was void before completion on either side
// (those keypoints sit on fabricated depth), back-project the survivors and
// keep the n best by descriptor distance. If fewer than n survive, the
// difference is written to *shortfall. Throws DegenerateFramePair when
// nothing survives.
MKPSet extract_mkps(const FrameInputs& a, const FrameInputs& b, int n,
                    const SiftParams& detector = {}, const MatchParams& matcher = {},
                    int* shortfall = nullptr);

}  // namespace rilo
