#include "rilo/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "rilo/errors.hpp"
#include "rilo/rng.hpp"

namespace rilo {

MKPSet label_mkps(const MKPSet& mkps, const Pose& gt, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("label_mkps: threshold must be positive");
  MKPSet out = mkps;
  Eigen::VectorXi labels(mkps.size());
  for (Eigen::Index k = 0; k < mkps.size(); ++k) {
    const double d = (apply(gt, mkps.left(k)) - mkps.right(k)).norm();
    labels(k) = d <= threshold ? 1 : 0;
  }
  out.labels = std::move(labels);
  return out;
}

namespace {

Pose fit_pose(const MKPSet& mkps, const std::vector<int>& idx, const TwistSolveOptions& opts) {
  TwistSystem sys;
  for (const int k : idx) accumulate_pair(sys, mkps.left(k), mkps.right(k));
  return twist_to_pose(solve_twist(sys, opts));
}

int score_pose(const MKPSet& mkps, const Pose& pose, double threshold,
               std::vector<std::uint8_t>& mask) {
  mask.assign(static_cast<std::size_t>(mkps.size()), 0);
  int count = 0;
  for (Eigen::Index k = 0; k < mkps.size(); ++k) {
    const double d = (apply(pose, mkps.left(k)) - mkps.right(k)).norm();
    if (d <= threshold) {
      mask[static_cast<std::size_t>(k)] = 1;
      ++count;
    }
  }
  return count;
}

}  // namespace

RansacResult ransac_estimate(const MKPSet& mkps, const RansacParams& params) {
  const Eigen::Index m = mkps.size();
  if (m < 3)
    throw DegenerateGeometry("ransac_estimate: need at least 3 pairs, have " + std::to_string(m));

  std::vector<int> best_sample;
  int best_count = -1;
  int best_iter = -1;
  Pose best_pose;

  std::vector<std::uint8_t> mask;
  for (int iter = 0; iter < params.iterations; ++iter) {
    auto rng = seeded_engine(params.seed, static_cast<std::uint64_t>(iter));
    std::vector<int> sample;
    while (sample.size() < 3) {
      const int k = static_cast<int>(bounded_uint(rng, static_cast<std::uint64_t>(m)));
      if (std::find(sample.begin(), sample.end(), k) == sample.end()) sample.push_back(k);
    }

    Pose cand;
    try {
      cand = fit_pose(mkps, sample, params.solve);
    } catch (const DegenerateGeometry&) {
      continue;  // collinear sample; try the next iteration
    }
    const int count = score_pose(mkps, cand, params.inlier_threshold, mask);
    if (count > best_count) {
      best_count = count;
      best_iter = iter;
      best_pose = cand;
      best_sample = sample;
    }
  }

  if (best_count < params.min_inliers)
    throw RobustEstimationFailure("ransac_estimate: best candidate has " +
                                  std::to_string(std::max(best_count, 0)) + " inliers, need " +
                                  std::to_string(params.min_inliers));

  // Refinement ladder: refit on the supporting set at progressively tighter
  // thresholds. Every candidate (including the raw sample winner) is scored
  // at the caller's threshold, and the one explaining the most pairs wins;
  // ties go to the lower total residual over its supporters.
  const auto evaluate = [&](const Pose& pose) {
    int count = 0;
    double residual_sum = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double d = (apply(pose, mkps.left(k)) - mkps.right(k)).norm();
      if (d <= params.inlier_threshold) {
        ++count;
        residual_sum += d;
      }
    }
    return std::make_pair(count, residual_sum);
  };

  Pose final_pose = best_pose;
  auto final_score = evaluate(best_pose);
  Pose current = best_pose;
  double tau = params.inlier_threshold;
  for (int round = 0; round < 3; ++round) {
    if (score_pose(mkps, current, tau, mask) < 3) break;
    std::vector<int> idx;
    for (Eigen::Index k = 0; k < m; ++k)
      if (mask[static_cast<std::size_t>(k)]) idx.push_back(static_cast<int>(k));
    try {
      current = fit_pose(mkps, idx, params.solve);
    } catch (const DegenerateGeometry&) {
      break;  // near-degenerate support; stop refining
    }
    const auto score = evaluate(current);
    if (score.first > final_score.first ||
        (score.first == final_score.first && score.second < final_score.second)) {
      final_score = score;
      final_pose = current;
    }
    tau *= 0.5;
  }

  RansacResult res;
  res.pose = final_pose;
  res.inlier_count = score_pose(mkps, res.pose, params.inlier_threshold, res.inliers);
  res.best_iteration = best_iter;
  return res;
}

Pose estimate_pair_bidirectional(const FrameInputs& a, const FrameInputs& b, int mkp_count,
                                 const SiftParams& detector, const MatchParams& matcher,
                                 const RansacParams& params) {
  RansacParams p = params;
  p.seed = splitmix64(params.seed ^ 0xf0f0f0f0ull);
  const Pose fwd = ransac_estimate(extract_mkps(a, b, mkp_count, detector, matcher), p).pose;
  p.seed = splitmix64(params.seed ^ 0x0f0f0f0full);
  const Pose rev =
      inverse(ransac_estimate(extract_mkps(b, a, mkp_count, detector, matcher), p).pose);

  Pose avg;
  avg.rotation =
      fwd.rotation * rotation_exp(0.5 * rotation_log(fwd.rotation.transpose() * rev.rotation));
  avg.translation = 0.5 * (fwd.translation + rev.translation);
  return avg;
}

namespace {

// Exact-bucket spatial hash: cell size equals the correspondence radius, so
// scanning the 27 surrounding cells covers every candidate within range.
class VoxelGrid {
 public:
  VoxelGrid(const PointCloud& cloud, double cell) : cloud_(cloud), cell_(cell) {
    for (std::size_t i = 0; i < cloud.size(); ++i)
      cells_[key(cloud.x[i], cloud.y[i], cloud.z[i])].push_back(static_cast<int>(i));
  }

  // Index of the nearest stored point within max_dist, ties to smaller index.
  int nearest(const Eigen::Vector3d& q, double max_dist) const {
    const long ix = coord(q.x()), iy = coord(q.y()), iz = coord(q.z());
    const double max_d2 = max_dist * max_dist;
    double best_d2 = std::numeric_limits<double>::infinity();
    int best = -1;
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy)
        for (long dz = -1; dz <= 1; ++dz) {
          const auto it = cells_.find(pack(ix + dx, iy + dy, iz + dz));
          if (it == cells_.end()) continue;
          for (const int i : it->second) {
            const double d2 = (cloud_.point(i) - q).squaredNorm();
            if (d2 <= max_d2 && (d2 < best_d2 || (d2 == best_d2 && i < best))) {
              best_d2 = d2;
              best = i;
            }
          }
        }
    return best;
  }

 private:
  long coord(double v) const { return static_cast<long>(std::floor(v / cell_)); }
  static std::uint64_t pack(long ix, long iy, long iz) {
    // 21 bits per signed coordinate — ample for scan-scale extents.
    const std::uint64_t ux = static_cast<std::uint64_t>(ix + (1L << 20)) & 0x1fffff;
    const std::uint64_t uy = static_cast<std::uint64_t>(iy + (1L << 20)) & 0x1fffff;
    const std::uint64_t uz = static_cast<std::uint64_t>(iz + (1L << 20)) & 0x1fffff;
    return (ux << 42) | (uy << 21) | uz;
  }
  std::uint64_t key(double x, double y, double z) const {
    return pack(coord(x), coord(y), coord(z));
  }

  const PointCloud& cloud_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

}  // namespace

IcpResult iterative_registration(const PointCloud& cloud_a, const PointCloud& cloud_b,
                                 const IcpParams& params) {
  if (cloud_a.empty() || cloud_b.empty())
    throw std::invalid_argument("iterative_registration: clouds must be non-empty");

  const VoxelGrid grid(cloud_b, params.max_corr_dist);
  IcpResult res;
  for (int iter = 1; iter <= params.max_iter; ++iter) {
    res.iterations = iter;
    const PointCloud moved = transform_cloud(cloud_a, res.pose);

    TwistSystem sys;
    for (std::size_t i = 0; i < moved.size(); ++i) {
      const Eigen::Vector3d p = moved.point(i);
      const int j = grid.nearest(p, params.max_corr_dist);
      if (j >= 0) accumulate_pair(sys, p, cloud_b.point(j));
    }

    TwistParams inc;
    try {
      inc = solve_twist(sys, params.solve);
    } catch (const DegenerateGeometry&) {
      res.final_delta = std::numeric_limits<double>::infinity();
      return res;  // too few / degenerate correspondences: report non-converged
    }
    res.pose = compose(twist_to_pose(inc), res.pose);
    res.final_delta = inc.angles().norm() + inc.b.norm();
    if (res.final_delta < params.tol) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

Trajectory accumulate_trajectory(const std::vector<Pose>& relative) {
  Trajectory traj;
  traj.absolute.reserve(relative.size() + 1);
  traj.absolute.push_back(Pose::identity());
  for (const Pose& rel : relative) traj.absolute.push_back(compose(traj.absolute.back(), rel));
  return traj;
}

}  // namespace rilo
