#include "rilo/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "rilo/errors.hpp"
#include "rilo/rng.hpp"

namespace rilo {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (augment_ratio < 0.0 || augment_ratio > 1.0)
    throw ConfigError("train: augment_ratio must lie in [0,1]");
  if (beta_max < 0.0) throw ConfigError("train: beta_max must be >= 0");
  if (top_k < 1) throw ConfigError("train: top_k must be >= 1");
  spec.validate();
}

std::pair<MKPSet, Pose> augment_rotation(const MKPSet& mkps, const Pose& gt, double beta_max,
                                         std::uint64_t seed) {
  if (beta_max < 0.0) throw std::invalid_argument("augment_rotation: beta_max must be >= 0");
  auto rng = seeded_engine(seed, 0xa6);
  const double beta = beta_max > 0.0 ? uniform_real(rng, -beta_max, beta_max) : 0.0;
  const Pose tr1 = make_yaw(beta);

  MKPSet out = mkps;
  for (Eigen::Index k = 0; k < out.size(); ++k)
    out.pairs.row(k).tail<3>() = (tr1.rotation * mkps.right(k)).transpose();
  return {std::move(out), compose(tr1, gt)};
}

namespace {

// In-place rotation of the right-hand points of already-selected rows.
Eigen::MatrixXd rotate_right(const Eigen::MatrixXd& X, double beta) {
  const Eigen::Matrix3d R = make_yaw(beta).rotation;
  Eigen::MatrixXd out = X;
  out.rightCols<3>() = X.rightCols<3>() * R.transpose();
  return out;
}

class Adam {
 public:
  Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& theta, const std::vector<double>& grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(0.9, t_);
    const double bc2 = 1.0 - std::pow(0.999, t_);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m_[i] = 0.9 * m_[i] + 0.1 * grad[i];
      v_[i] = 0.999 * v_[i] + 0.001 * grad[i] * grad[i];
      theta[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + 1e-8);
    }
  }

 private:
  double lr_;
  int t_ = 0;
  std::vector<double> m_, v_;
};

std::vector<std::vector<int>> make_batches(std::size_t n, int batch_size, std::mt19937_64& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle_vector(order, rng);
  std::vector<std::vector<int>> batches;
  for (std::size_t i = 0; i < n; i += batch_size)
    batches.emplace_back(order.begin() + i,
                         order.begin() + std::min(n, i + static_cast<std::size_t>(batch_size)));
  return batches;
}

void check_finite(double loss, const char* what, int epoch) {
  if (!std::isfinite(loss))
    throw TrainingDiverged(std::string(what) + " loss became non-finite at epoch " +
                           std::to_string(epoch));
}

}  // namespace

TrainedModels train(const std::vector<TrainSample>& dataset, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: dataset is empty");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].mkps.size() < 1)
      throw std::invalid_argument("train: sample " + std::to_string(i) + " has no pairs");
    if (!dataset[i].mkps.labels)
      throw std::invalid_argument("train: sample " + std::to_string(i) + " is unlabeled");
  }

  TrainedModels models{SelectionNet::create(cfg.spec, splitmix64(cfg.seed)),
                       RegressionNet::create(cfg.spec, splitmix64(cfg.seed ^ 1)),
                       RegressionNet::create(cfg.spec, splitmix64(cfg.seed ^ 2)),
                       {}};

  // Phase 1: selection scoring against the pair labels.
  {
    std::vector<double> theta = flatten_params(models.selection);
    Adam opt(theta.size(), cfg.learning_rate);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      auto rng = seeded_engine(cfg.seed, 0x5e1000 + static_cast<std::uint64_t>(epoch));
      double epoch_loss = 0.0;
      for (const auto& batch : make_batches(dataset.size(), cfg.batch_size, rng)) {
        SelectionNet grad = zeros_like(models.selection);
        double batch_loss = 0.0;
        for (const int si : batch)
          batch_loss += selection_loss_grad(models.selection, dataset[si].mkps.pairs,
                                            *dataset[si].mkps.labels, grad);
        std::vector<double> g = flatten_params(grad);
        for (double& v : g) v /= static_cast<double>(batch.size());
        opt.step(theta, g);
        unflatten_params(models.selection, theta);
        epoch_loss += batch_loss;
      }
      epoch_loss /= static_cast<double>(dataset.size());
      check_finite(epoch_loss, "selection", epoch);
      models.curve.selection.push_back(epoch_loss);
    }
  }

  // The regressors see the trained selector's top-k pairs.
  std::vector<Eigen::MatrixXd> selected(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const SelectionOutput sel = selection_forward(models.selection, dataset[i].mkps, cfg.top_k);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(sel.top_k.size()), 6);
    for (std::size_t r = 0; r < sel.top_k.size(); ++r)
      X.row(static_cast<Eigen::Index>(r)) = dataset[i].mkps.pairs.row(sel.top_k[r]);
    selected[i] = std::move(X);
  }

  // Phase 2: rotation (with per-batch yaw augmentation) and translation.
  {
    std::vector<double> theta_r = flatten_params(models.rotation);
    std::vector<double> theta_t = flatten_params(models.translation);
    Adam opt_r(theta_r.size(), cfg.learning_rate);
    Adam opt_t(theta_t.size(), cfg.learning_rate);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      auto rng = seeded_engine(cfg.seed, 0x2e6000 + static_cast<std::uint64_t>(epoch));
      double rot_loss = 0.0, tra_loss = 0.0;
      std::size_t batch_index = 0;
      for (const auto& batch : make_batches(dataset.size(), cfg.batch_size, rng)) {
        auto aug_rng = seeded_engine(cfg.seed, splitmix64(0xbe7a00 + batch_index) ^
                                                   static_cast<std::uint64_t>(epoch));
        const int n_aug =
            static_cast<int>(std::lround(cfg.augment_ratio * static_cast<double>(batch.size())));

        RegressionNet grad_r = zeros_like(models.rotation);
        RegressionNet grad_t = zeros_like(models.translation);
        double batch_rot = 0.0, batch_tra = 0.0;
        for (std::size_t p = 0; p < batch.size(); ++p) {
          const TrainSample& sample = dataset[batch[p]];
          const Eigen::MatrixXd& X = selected[batch[p]];

          Pose gt_rot = sample.gt;
          const Eigen::MatrixXd* Xr = &X;
          Eigen::MatrixXd Xaug;
          if (static_cast<int>(p) < n_aug && cfg.beta_max > 0.0) {
            const double beta = uniform_real(aug_rng, -cfg.beta_max, cfg.beta_max);
            Xaug = rotate_right(X, beta);
            Xr = &Xaug;
            gt_rot = compose(make_yaw(beta), sample.gt);
          }
          const Eigen::Vector3d qv = quat_from_pose(gt_rot).vector_part();
          batch_rot += regression_loss_grad(models.rotation, *Xr, qv, grad_r);
          batch_tra += regression_loss_grad(models.translation, X, sample.gt.translation, grad_t);
        }

        std::vector<double> gr = flatten_params(grad_r);
        std::vector<double> gt_ = flatten_params(grad_t);
        for (double& v : gr) v /= static_cast<double>(batch.size());
        for (double& v : gt_) v /= static_cast<double>(batch.size());
        opt_r.step(theta_r, gr);
        opt_t.step(theta_t, gt_);
        unflatten_params(models.rotation, theta_r);
        unflatten_params(models.translation, theta_t);
        rot_loss += batch_rot;
        tra_loss += batch_tra;
        ++batch_index;
      }
      rot_loss /= static_cast<double>(dataset.size());
      tra_loss /= static_cast<double>(dataset.size());
      check_finite(rot_loss, "rotation", epoch);
      check_finite(tra_loss, "translation", epoch);
      models.curve.rotation.push_back(rot_loss);
      models.curve.translation.push_back(tra_loss);
    }
  }
  return models;
}

void save_loss_csv(const LossCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open loss file for writing: " + path.string());
  out.precision(12);
  out << "epoch,selection,rotation,translation\n";
  const std::size_t n = std::max({curve.selection.size(), curve.rotation.size(),
                                  curve.translation.size()});
  for (std::size_t e = 0; e < n; ++e) {
    out << e;
    out << ",";
    if (e < curve.selection.size()) out << curve.selection[e];
    out << ",";
    if (e < curve.rotation.size()) out << curve.rotation[e];
    out << ",";
    if (e < curve.translation.size()) out << curve.translation[e];
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace rilo
