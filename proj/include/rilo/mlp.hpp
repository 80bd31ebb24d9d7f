#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "rilo/mkp.hpp"
#include "rilo/pose.hpp"

namespace rilo {

// Dense layer y = W x + b. All math runs in double so analytic gradients can
// be held to a tight finite-difference tolerance; checkpoints narrow to
// float32 on disk.
struct LinearLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
};

// Shared shape of the three networks: a per-point trunk (input width 6, the
// MKP row) feeding a channel-wise max-pool, then a fully connected head.
// Rectifier activations throughout; no input/feature transform subnetworks.
struct MlpSpec {
  std::vector<int> trunk_widths = {6, 64, 128, 256};
  std::vector<int> head_hidden = {128};

  void validate() const;  // throws ConfigError
  int feature_width() const { return trunk_widths.back(); }
};

// Per-pair scoring net: each point's trunk feature is concatenated with the
// pooled global feature (segmentation-style) and mapped to one sigmoid score.
struct SelectionNet {
  std::vector<LinearLayer> trunk;
  std::vector<LinearLayer> head;  // input 2*feature, output 1 (logit)

  static SelectionNet create(const MlpSpec& spec, std::uint64_t seed);
};

// Pooled-feature regressor with a 3-wide linear output; used for both the
// rotation (quaternion vector part) and translation heads.
struct RegressionNet {
  std::vector<LinearLayer> trunk;
  std::vector<LinearLayer> head;  // input feature, output 3

  static RegressionNet create(const MlpSpec& spec, std::uint64_t seed);
};

struct SelectionOutput {
  Eigen::VectorXd scores;   // per pair, in (0, 1)
  std::vector<int> top_k;   // indices of the k largest scores, ties to lower index
};

// Scores for an m x 6 batch of pairs (rows = pairs).
Eigen::VectorXd selection_scores(const SelectionNet& net, const Eigen::MatrixXd& X);

SelectionOutput selection_forward(const SelectionNet& net, const MKPSet& mkps, int k);

Eigen::Vector3d regression_forward(const RegressionNet& net, const Eigen::MatrixXd& X);

// Standalone k-largest selection with the same tie rule as selection_forward.
std::vector<int> top_k_indices(const Eigen::VectorXd& scores, int k);

// Losses. Rotation/translation are squared L2 against the target components;
// the rotation target is the vector part of a canonical (a >= 0) quaternion.
double rotation_loss(const Eigen::Vector3d& pred, const UnitQuaternion& gt);
double translation_loss(const Eigen::Vector3d& pred, const Eigen::Vector3d& gt);
// Mean binary cross-entropy of sigmoid scores against {0,1} labels.
double selection_bce(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels);

// Loss plus parameter gradients, accumulated into `grad` (same shapes as the
// net; caller zeroes). The selection path evaluates the cross-entropy from
// logits for numerical stability — the value matches selection_bce.
double selection_loss_grad(const SelectionNet& net, const Eigen::MatrixXd& X,
                           const Eigen::VectorXi& labels, SelectionNet& grad);
double regression_loss_grad(const RegressionNet& net, const Eigen::MatrixXd& X,
                            const Eigen::Vector3d& target, RegressionNet& grad);

// Parameter plumbing: a stable flattened view used by the optimizer, the
// finite-difference checks, and the checkpoint writer.
std::vector<double> flatten_params(const SelectionNet& net);
std::vector<double> flatten_params(const RegressionNet& net);
void unflatten_params(SelectionNet& net, const std::vector<double>& theta);
void unflatten_params(RegressionNet& net, const std::vector<double>& theta);
SelectionNet zeros_like(const SelectionNet& net);
RegressionNet zeros_like(const RegressionNet& net);

// Checkpoints: row-major float32 tensors in `path`, with a JSON manifest at
// `path + ".json"` listing name, shape, and byte offset per tensor. Loading
// verifies the manifest against the net's shapes (FormatError on mismatch).
void save_checkpoint(const SelectionNet& net, const std::filesystem::path& path);
void save_checkpoint(const RegressionNet& net, const std::filesystem::path& path);
void load_checkpoint(SelectionNet& net, const std::filesystem::path& path);
void load_checkpoint(RegressionNet& net, const std::filesystem::path& path);

}  // namespace rilo
