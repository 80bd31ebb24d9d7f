#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rilo/ini.hpp"
#include "rilo/point_cloud.hpp"
#include "rilo/pose.hpp"

namespace rilo {

// Spinning multi-ring scanner: `rings` elevation steps spanning
// [elev_min, elev_max] (top ring near elev_max), `azimuth_steps` columns over
// the full circle. Rays sit at bin centers; `jitter` (fraction of a bin,
// capped at 0.49 so a ray never leaves its bin) adds a per-ray angular offset
// that is a fixed function of the seed — the same pattern every frame.
struct ScannerModel {
  int rings = 64;
  int azimuth_steps = 1024;
  double elev_max = 2.0 * M_PI / 180.0;
  double elev_min = -24.8 * M_PI / 180.0;
  double max_range = 80.0;
  double jitter = 0.0;
};

// Horizontal plane z = z0 (in the world frame), optionally drifting.
struct PlaneSpec {
  double z = 0.0;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  float intensity = 0.2f;
};

// Axis-aligned box rotated by `yaw` about +z through its center.
struct BoxSpec {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  double yaw = 0.0;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  float intensity = 0.5f;
};

// Vertical cylinder (lateral surface only, no caps).
struct CylinderSpec {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.5;
  double z_min = -1.0;
  double z_max = 1.0;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  float intensity = 0.8f;
};

// Per-frame sensor motion for generated sequences, expressed in the sensor's
// own frame (translate by `step`, then yaw by `yaw_step`).
struct MotionSpec {
  int frames = 2;
  Eigen::Vector3d step = Eigen::Vector3d::Zero();
  double yaw_step = 0.0;
  double dt = 0.1;  // seconds per frame, drives primitive velocities
};

struct SceneSpec {
  ScannerModel scanner;
  std::vector<PlaneSpec> planes;
  std::vector<BoxSpec> boxes;
  std::vector<CylinderSpec> cylinders;
  std::optional<MotionSpec> motion;

  bool has_primitives() const { return !(planes.empty() && boxes.empty() && cylinders.empty()); }

  // Reads [scanner], repeated [plane]/[box]/[cylinder], and optional [motion]
  // sections. Angles are given in degrees in the file (keys end in _deg).
  static SceneSpec from_ini(const IniDoc& doc);
  static SceneSpec from_file(const std::filesystem::path& path);
};

// Renders one scan: casts every scanner ray from `sensor_pose` (sensor→world)
// through the scene at time `time` and keeps the nearest hit within max_range.
// Points are returned in the sensor frame, ring-major then azimuth order.
// Deterministic in (seed, spec, pose, time). Throws ConfigError when the spec
// has no primitives.
PointCloud synth_scene(std::uint64_t seed, const SceneSpec& spec,
                       const Pose& sensor_pose = Pose::identity(), double time = 0.0);

// Unsigned distance from a world-frame point to the nearest primitive surface
// at time `time`; used to check that rendered points lie on geometry.
double surface_distance(const SceneSpec& spec, const Eigen::Vector3d& world_point,
                        double time = 0.0);

// World pose of frame k under spec.motion (frame 0 = identity). Also the
// ground-truth pose-file entry for generated sequences.
Pose motion_pose(const MotionSpec& motion, int frame);

}  // namespace rilo
