#include "rilo/point_cloud.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "rilo/errors.hpp"
#include "rilo/kernels.hpp"

namespace rilo {

void PointCloud::reserve(std::size_t n) {
  x.reserve(n);
  y.reserve(n);
  z.reserve(n);
  intensity.reserve(n);
}

void PointCloud::push_back(double px, double py, double pz, float i) {
  x.push_back(px);
  y.push_back(py);
  z.push_back(pz);
  intensity.push_back(i);
}

PointCloud load_kitti_scan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scan file: " + path.string());

  in.seekg(0, std::ios::end);
  const std::streamoff bytes = in.tellg();
  in.seekg(0, std::ios::beg);
  if (bytes % 16 != 0)
    throw FormatError("scan file " + path.string() + " is not a multiple of 16 bytes (" +
                      std::to_string(bytes % 16) + " residual bytes)");

  const std::size_t n = static_cast<std::size_t>(bytes) / 16;
  std::vector<float> raw(n * 4);
  if (n > 0) {
    in.read(reinterpret_cast<char*>(raw.data()), bytes);
    if (!in) throw IoError("short read on scan file: " + path.string());
  }

  PointCloud cloud;
  cloud.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    cloud.push_back(raw[4 * i + 0], raw[4 * i + 1], raw[4 * i + 2], raw[4 * i + 3]);
  return cloud;
}

void write_kitti_scan(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open scan file for writing: " + path.string());
  std::vector<float> raw(cloud.size() * 4);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    raw[4 * i + 0] = static_cast<float>(cloud.x[i]);
    raw[4 * i + 1] = static_cast<float>(cloud.y[i]);
    raw[4 * i + 2] = static_cast<float>(cloud.z[i]);
    raw[4 * i + 3] = cloud.intensity[i];
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path.string());
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose& p) {
  PointCloud out = cloud;
  if (out.empty()) return out;
  double R[9];
  Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> rmap(R);
  rmap = p.rotation;
  const double t[3] = {p.translation.x(), p.translation.y(), p.translation.z()};
  kernels::active().transform3(R, t, out.x.data(), out.y.data(), out.z.data(), out.size(),
                               out.x.data(), out.y.data(), out.z.data());
  return out;
}

}  // namespace rilo
