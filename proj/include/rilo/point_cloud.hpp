#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "rilo/pose.hpp"

namespace rilo {

// Structure-of-arrays cloud in the sensor frame. Coordinates are held as
// doubles internally; intensity rides along untouched by the pipeline.
struct PointCloud {
  std::vector<double> x, y, z;
  std::vector<float> intensity;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }

  void reserve(std::size_t n);
  void push_back(double px, double py, double pz, float i = 0.0f);
  Eigen::Vector3d point(std::size_t i) const { return {x[i], y[i], z[i]}; }
};

// Reads a raw scan: consecutive little-endian float32 quadruples
// (x, y, z, intensity). Throws IoError on open failure and FormatError when
// the byte length is not a multiple of 16 (the message names the remainder).
PointCloud load_kitti_scan(const std::filesystem::path& path);

// Inverse of load_kitti_scan (coordinates narrowed to float32).
void write_kitti_scan(const PointCloud& cloud, const std::filesystem::path& path);

// Applies p to every point; order and intensity preserved.
PointCloud transform_cloud(const PointCloud& cloud, const Pose& p);

}  // namespace rilo
