#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "rilo/point_cloud.hpp"

namespace rilo {

// Geometry of the spherical depth image. Rows span the vertical field of view
// (top row at elev_max by default, flip with top_row_max_elevation = false);
// columns cover the full circle with column 0 at azimuth -pi.
struct ProjectionConfig {
  int H = 64;
  int W = 1024;
  double elev_min = -24.8 * M_PI / 180.0;
  double elev_max = 2.0 * M_PI / 180.0;
  double max_range = 80.0;
  bool top_row_max_elevation = true;

  double dalpha() const { return (elev_max - elev_min) / H; }
  double dbeta() const { return 2.0 * M_PI / W; }
  void validate() const;  // throws ConfigError on nonsense values
};

// Depth image plus the bookkeeping needed to go back to 3D: a validity mask
// and, per valid pixel, the index of the source point in the original cloud.
struct SphericalImage {
  int H = 0, W = 0;
  std::vector<double> depth;           // range in meters, 0 where void
  std::vector<std::uint8_t> valid;     // 1 where a point landed
  std::vector<std::int32_t> index_map; // source point index, -1 where void
  std::size_t dropped = 0;             // points outside the vertical FOV
  ProjectionConfig config;

  std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * W + c; }
  double depth_at(int r, int c) const { return depth[idx(r, c)]; }
  bool valid_at(int r, int c) const { return valid[idx(r, c)] != 0; }
};

// 8-bit contrast-equalized view of a (completed) depth image.
struct EqualizedImage {
  int H = 0, W = 0;
  std::vector<std::uint8_t> gray;
  const SphericalImage* source = nullptr;

  std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * W + c; }
  std::uint8_t at(int r, int c) const { return gray[idx(r, c)]; }
};

// Projects each point at elevation arcsin(z/r) and azimuth atan2(y, x) into
// the H x W grid. On pixel collisions the nearest point wins (ties: the
// earlier point in cloud order). Out-of-FOV points are dropped and counted.
SphericalImage project(const PointCloud& cloud, const ProjectionConfig& cfg);

// The original stored point for a pixel, or nullopt for void pixels (the
// rejection signal used to discard keypoints fabricated by depth completion).
std::optional<Eigen::Vector3d> back_project(const SphericalImage& image, int row, int col,
                                            const PointCloud& cloud);

// Fills every void pixel with the depth of its nearest valid pixel (Euclidean
// distance in pixel coordinates, ties to the smallest row-major index). The
// returned image keeps the ORIGINAL validity mask and index map so later
// stages can tell real pixels from filled ones. Throws DegenerateGeometry on
// an all-void image.
SphericalImage depth_completion(const SphericalImage& image);

// Standard cumulative-histogram equalization over 256 depth bins; depth is
// clamped to [0, max_range] first. Monotone in depth.
EqualizedImage histogram_equalize(const SphericalImage& completed, const ProjectionConfig& cfg);

// Debug exports.
void write_pgm(const EqualizedImage& image, const std::filesystem::path& path);
void write_depth_pgm(const SphericalImage& image, const std::filesystem::path& path);
void write_index_csv(const SphericalImage& image, const std::filesystem::path& path);

}  // namespace rilo
