#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>

namespace rilo {

// Matched keypoint pairs between two frames: row k holds the 3D point in the
// earlier frame (xi, yi, zi) and its match in the later frame (xj, yj, zj).
// Weights (selection scores in [0,1]) and binary labels are optional side
// channels used by the selection network and its training labels.
struct MKPSet {
  Eigen::MatrixXd pairs;  // m x 6
  std::optional<Eigen::VectorXd> weights;
  std::optional<Eigen::VectorXi> labels;

  Eigen::Index size() const { return pairs.rows(); }
  Eigen::Vector3d left(Eigen::Index k) const { return pairs.row(k).head<3>(); }
  Eigen::Vector3d right(Eigen::Index k) const { return pairs.row(k).tail<3>(); }

  // Throws std::invalid_argument on non-finite entries, weight/label vectors
  // of the wrong length, weights outside [0,1], or labels outside {0,1}.
  void validate() const;
};

// CSV with header xi,yi,zi,xj,yj,zj plus optional weight and label columns,
// full float precision.
void save_mkps(const MKPSet& set, const std::filesystem::path& path);
MKPSet load_mkps(const std::filesystem::path& path);

}  // namespace rilo
