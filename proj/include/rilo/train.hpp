#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "rilo/mlp.hpp"
#include "rilo/mkp.hpp"
#include "rilo/pose.hpp"

namespace rilo {

// One labeled frame pair: MKPs (with 0/1 pair labels) and the ground-truth
// transform mapping left-frame points onto their right-frame matches.
struct TrainSample {
  MKPSet mkps;
  Pose gt;
};

struct TrainConfig {
  int batch_size = 128;
  double learning_rate = 1e-4;
  int epochs = 10;
  double augment_ratio = 0.05;          // fraction of each batch yaw-augmented
  double beta_max = 3.0 * M_PI / 180.0; // augmentation yaw bound
  std::uint64_t seed = 0;
  int top_k = 100;                      // pairs fed to the regressors
  MlpSpec spec;

  void validate() const;  // throws ConfigError
};

// Yaw augmentation: draws beta uniform in (-beta_max, beta_max), rotates each
// pair's RIGHT point by Yaw(beta), and composes the same rotation into the
// ground truth, so exact pairs stay exact under the returned pose. Labels and
// weights ride along unchanged.
std::pair<MKPSet, Pose> augment_rotation(const MKPSet& mkps, const Pose& gt, double beta_max,
                                         std::uint64_t seed);

// Per-epoch mean training losses; one entry per epoch and network.
struct LossCurve {
  std::vector<double> selection;
  std::vector<double> rotation;
  std::vector<double> translation;
};

struct TrainedModels {
  SelectionNet selection;
  RegressionNet rotation;
  RegressionNet translation;
  LossCurve curve;
};

// Trains the three networks with Adam (0.9/0.999/1e-8). Sequential schedule:
// the selection net first (binary cross-entropy on the pair labels), then the
// rotation and translation regressors on the trained selector's top-k pairs —
// rotation with squared L2 against the ground-truth quaternion vector part
// and round(augment_ratio * batch) yaw-augmented samples per batch,
// translation with squared L2 against the ground-truth translation on real
// samples only. Deterministic given cfg.seed. Throws TrainingDiverged on a
// non-finite loss.
TrainedModels train(const std::vector<TrainSample>& dataset, const TrainConfig& cfg);

// CSV with columns epoch,selection,rotation,translation.
void save_loss_csv(const LossCurve& curve, const std::filesystem::path& path);

}  // namespace rilo
