#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rilo/matching.hpp"
#include "rilo/mkp.hpp"
#include "rilo/point_cloud.hpp"
#include "rilo/twist.hpp"

namespace rilo {

// Labels each pair by ground truth: 1 iff ||gt(x) - y|| <= threshold, i.e.
// the pair is consistent with the rigid motion (static scene), 0 otherwise
// (mismatches and dynamic objects).
MKPSet label_mkps(const MKPSet& mkps, const Pose& gt, double threshold);

struct RansacParams {
  int iterations = 500;
  double inlier_threshold = 0.1;  // meters
  int min_inliers = 10;
  std::uint64_t seed = 0;
  TwistSolveOptions solve;
};

struct RansacResult {
  Pose pose;
  std::vector<std::uint8_t> inliers;  // mask under the returned (refined) pose
  int inlier_count = 0;
  int best_iteration = -1;
};

// Robust twist estimation: samples 3 pairs per iteration (the sampling stream
// is derived from (seed, iteration), so results do not depend on execution
// order) and scores candidates by pair distance under the candidate pose. The
// winner is polished by refitting on its support under a halving threshold
// ladder; each ladder candidate is scored at inlier_threshold and the pose
// explaining the most pairs wins (ties broken by lower total residual). The
// returned mask and count are evaluated at inlier_threshold. Throws
// RobustEstimationFailure when no candidate reaches min_inliers,
// DegenerateGeometry when m < 3.
RansacResult ransac_estimate(const MKPSet& mkps, const RansacParams& params = {});

// Forward pose (earlier-frame points onto later-frame matches) estimated in
// both directions and averaged: extract_mkps + ransac_estimate run a-to-b
// and b-to-a, the reverse result is inverted, and the two forward poses meet
// at the rotation-geodesic midpoint (translations averaged). Matched pixels
// drift slightly along the apparent expansion of approaching structure; the
// drift has opposite sign in the two directions, so the midpoint cancels it
// to first order. The RANSAC streams derive from params.seed (distinct
// sub-seeds per direction). Propagates the per-direction exceptions
// (DegenerateFramePair, RobustEstimationFailure, DegenerateGeometry).
Pose estimate_pair_bidirectional(const FrameInputs& a, const FrameInputs& b, int mkp_count,
                                 const SiftParams& detector, const MatchParams& matcher,
                                 const RansacParams& params);

struct IcpParams {
  int max_iter = 50;
  double tol = 1e-6;            // pose-update norm below which we stop
  double max_corr_dist = 1.0;   // meters; pairs farther apart are ignored
  TwistSolveOptions solve;
};

struct IcpResult {
  Pose pose;  // maps cloud_a coordinates into cloud_b's frame
  bool converged = false;
  int iterations = 0;
  double final_delta = 0.0;
};

// Point-to-point ICP baseline: alternates nearest-neighbor correspondence
// (voxel-hash accelerated) with a solve_twist update. Non-convergence is
// reported via the flag, not an error — sensitivity to initialization is
// part of what this baseline demonstrates.
IcpResult iterative_registration(const PointCloud& cloud_a, const PointCloud& cloud_b,
                                 const IcpParams& params = {});

struct Trajectory {
  std::vector<Pose> absolute;  // element 0 is the identity
  std::optional<std::vector<double>> timestamps;

  std::size_t size() const { return absolute.size(); }
};

// Chains relative poses (KITTI convention: relative[k-1] maps frame-k
// coordinates into frame k-1): absolute[k] = absolute[k-1] * relative[k-1].
Trajectory accumulate_trajectory(const std::vector<Pose>& relative);

}  // namespace rilo
