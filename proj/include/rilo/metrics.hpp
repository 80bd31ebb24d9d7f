#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rilo/estimation.hpp"

namespace rilo {

// Published accuracy on KITTI sequence 09 for the approach this toolkit
// follows (t_rel percent, r_rel degrees per 100 m). Shown as context next to
// evaluation output; not a test gate — reproducing it needs the real dataset
// and fully trained networks.
inline constexpr double kReferenceSeq09TRel = 0.63;
inline constexpr double kReferenceSeq09RRel = 0.35;

struct SegmentStats {
  double length = 0.0;              // nominal segment length in meters
  int count = 0;                    // segments evaluated
  double t_rel_percent = 0.0;
  double r_rel_deg_per_100m = 0.0;
};

struct EvalReport {
  double t_rel_percent = 0.0;       // average over every (start, length) segment
  double r_rel_deg_per_100m = 0.0;
  std::vector<SegmentStats> breakdown;  // per length, ascending
  std::size_t frames = 0;
  double path_length = 0.0;         // gt arc length in meters
  bool short_path = false;          // true when no 100 m segment fits
};

// KITTI-protocol relative errors. For every start frame and each segment
// length L in {100, ..., 800} m the segment ends at the first frame whose gt
// arc length from the start reaches L; the error of the relative-pose
// discrepancy over that segment is normalized by L. Segment boundaries come
// from gt alone. Throws std::invalid_argument on length mismatch or fewer
// than 2 frames.
EvalReport kitti_metrics(const Trajectory& est, const Trajectory& gt);

// Pose files: one line per frame, 12 space-separated floats forming the
// row-major 3x4 [R|t] that maps frame-k coordinates into frame 0. Malformed
// lines raise FormatError naming the line; rotation blocks off orthonormal by
// more than 1e-3 append a warning naming the frame.
Trajectory read_pose_file(const std::filesystem::path& path,
                          std::vector<std::string>* warnings = nullptr);
void write_pose_file(const Trajectory& traj, const std::filesystem::path& path);

// Plot-data export of ground-plane (x, z) tracks: a stacked CSV
// (name,frame,x,z) and an SVG polyline overlay with a legend and axis labels.
void export_trajectory_plot(const std::vector<std::pair<std::string, Trajectory>>& trajs,
                            const std::filesystem::path& csv_path,
                            const std::filesystem::path& svg_path);

void write_report_json(const EvalReport& report, const std::filesystem::path& path);
std::string format_report_table(const EvalReport& report);

}  // namespace rilo
