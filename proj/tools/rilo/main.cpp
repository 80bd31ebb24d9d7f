// Command-line front end: scene synthesis, projection debugging, MKP
// extraction, odometry runs, training, evaluation, and plotting, all driven
// by one INI config. Exit codes: 0 ok, 1 usage, 2 data error, 3 estimation
// failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rilo/config.hpp"
#include "rilo/errors.hpp"
#include "rilo/estimation.hpp"
#include "rilo/kernels.hpp"
#include "rilo/matching.hpp"
#include "rilo/metrics.hpp"
#include "rilo/mlp.hpp"
#include "rilo/projection.hpp"
#include "rilo/rng.hpp"
#include "rilo/synth.hpp"
#include "rilo/train.hpp"

namespace fs = std::filesystem;
using namespace rilo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitEstimation = 3;

// Raised when --strict turns a skippable frame failure into an abort.
struct StrictAbort {
  std::string message;
};

// All artifacts are committed atomically: written to a sibling temp file and
// renamed into place, so a crash never leaves a truncated output.
template <typename Writer>
void commit_atomic(const fs::path& final, Writer&& writer) {
  if (!final.parent_path().empty()) fs::create_directories(final.parent_path());
  fs::path tmp = final;
  tmp += ".tmp";
  writer(tmp);
  fs::rename(tmp, final);
}

template <typename Net>
void save_checkpoint_atomic(const Net& net, const fs::path& final) {
  if (!final.parent_path().empty()) fs::create_directories(final.parent_path());
  fs::path tmp = final;
  tmp += ".tmp";
  save_checkpoint(net, tmp);  // writes tmp and tmp.json
  fs::rename(tmp, final);
  fs::rename(tmp.string() + ".json", final.string() + ".json");
}

std::vector<fs::path> list_scans(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("scan directory not found: " + dir.string());
  }
  std::vector<fs::path> scans;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      scans.push_back(entry.path());
    }
  }
  std::sort(scans.begin(), scans.end());
  return scans;
}

// A frame prepared for matching. Heap-allocated so the equalized image's
// back-pointer to the completed depth image stays valid across moves.
struct FrameData {
  PointCloud cloud;
  SphericalImage completed;
  EqualizedImage equalized;

  FrameInputs inputs() const { return {&completed, &equalized, &cloud}; }
};

// Loads and projects one scan. I/O problems propagate (data error); a
// degenerate projection returns nullptr so the caller can apply the
// skip-or-abort policy.
std::unique_ptr<FrameData> prepare_frame(const fs::path& scan, const ProjectionConfig& pc,
                                         bool strict) {
  auto frame = std::make_unique<FrameData>();
  frame->cloud = load_kitti_scan(scan);
  try {
    frame->completed = depth_completion(project(frame->cloud, pc));
    frame->equalized = histogram_equalize(frame->completed, pc);
  } catch (const DegenerateGeometry& e) {
    if (strict) throw StrictAbort{scan.string() + ": " + e.what()};
    std::cerr << "warning: skipping frame " << scan.filename().string() << ": " << e.what()
              << "\n";
    return nullptr;
  }
  return frame;
}

struct NeuralModels {
  SelectionNet selection;
  RegressionNet rotation;
  RegressionNet translation;
};

NeuralModels load_models(const MlpSpec& spec, const fs::path& dir) {
  NeuralModels m{SelectionNet::create(spec, 0), RegressionNet::create(spec, 0),
                 RegressionNet::create(spec, 0)};
  load_checkpoint(m.selection, dir / "selection.bin");
  load_checkpoint(m.rotation, dir / "rotation.bin");
  load_checkpoint(m.translation, dir / "translation.bin");
  return m;
}

Pose neural_estimate(const MKPSet& mkps, const NeuralModels& models, int k) {
  const SelectionOutput sel = selection_forward(models.selection, mkps, k);
  Eigen::MatrixXd selected(static_cast<Eigen::Index>(sel.top_k.size()), 6);
  for (std::size_t i = 0; i < sel.top_k.size(); ++i) {
    selected.row(static_cast<Eigen::Index>(i)) = mkps.pairs.row(sel.top_k[i]);
  }
  Pose pose;
  pose.rotation = quat_to_rotation(quat_recover(regression_forward(models.rotation, selected)));
  pose.translation = regression_forward(models.translation, selected);
  return pose;
}

struct OdometryOpts {
  std::uint64_t seed = 0;
  bool strict = false;
  fs::path out_dir;
};

int run_odometry(const PipelineConfig& cfg, const OdometryOpts& opts) {
  const std::vector<fs::path> scans = list_scans(cfg.scans_dir);
  if (scans.size() < 2) {
    throw FormatError("need at least 2 scans in " + cfg.scans_dir.string() + ", found " +
                      std::to_string(scans.size()));
  }

  std::optional<Trajectory> gt;
  if (!cfg.poses_path.empty()) {
    std::vector<std::string> warnings;
    gt = read_pose_file(cfg.poses_path, &warnings);
    for (const std::string& w : warnings) {
      std::cerr << "warning: " << cfg.poses_path.string() << ": " << w << "\n";
    }
    if (gt->size() != scans.size()) {
      throw FormatError("pose file has " + std::to_string(gt->size()) + " frames but " +
                        std::to_string(scans.size()) + " scans were found");
    }
  }

  std::optional<NeuralModels> models;
  if (cfg.estimator == "neural") {
    models = load_models(cfg.train.spec, cfg.model_dir);
  }

  std::vector<Pose> relatives;
  std::vector<double> pair_ms;
  relatives.reserve(scans.size() - 1);

  std::unique_ptr<FrameData> prev;
  if (cfg.estimator != "icp_baseline") {
    prev = prepare_frame(scans[0], cfg.projection, opts.strict);
  } else {
    prev = std::make_unique<FrameData>();
    prev->cloud = load_kitti_scan(scans[0]);
  }

  for (std::size_t k = 0; k + 1 < scans.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    std::unique_ptr<FrameData> next;
    if (cfg.estimator != "icp_baseline") {
      next = prepare_frame(scans[k + 1], cfg.projection, opts.strict);
    } else {
      next = std::make_unique<FrameData>();
      next->cloud = load_kitti_scan(scans[k + 1]);
    }

    Pose rel = Pose::identity();
    if (prev && next) {
      try {
        Pose forward;  // maps frame-k points onto their frame-(k+1) positions
        if (cfg.estimator == "icp_baseline") {
          forward = iterative_registration(prev->cloud, next->cloud, cfg.icp).pose;
        } else if (cfg.estimator == "neural") {
          MKPSet mkps = extract_mkps(prev->inputs(), next->inputs(), cfg.mkp_count,
                                     cfg.detector, cfg.matcher);
          forward = neural_estimate(mkps, *models, cfg.selection_k);
        } else {
          RansacParams params = cfg.ransac;
          params.seed = splitmix64(opts.seed ^ (k + 1));
          forward = estimate_pair_bidirectional(prev->inputs(), next->inputs(), cfg.mkp_count,
                                                cfg.detector, cfg.matcher, params);
        }
        rel = inverse(forward);
      } catch (const DegenerateFramePair& e) {
        if (opts.strict) throw StrictAbort{e.what()};
        std::cerr << "warning: pair " << k << ": " << e.what() << "; using identity\n";
      } catch (const DegenerateGeometry& e) {
        if (opts.strict) throw StrictAbort{e.what()};
        std::cerr << "warning: pair " << k << ": " << e.what() << "; using identity\n";
      } catch (const RobustEstimationFailure& e) {
        if (opts.strict) throw StrictAbort{e.what()};
        std::cerr << "warning: pair " << k << ": " << e.what() << "; using identity\n";
      }
    } else if (opts.strict) {
      throw StrictAbort{"pair " + std::to_string(k) + ": frame unavailable"};
    } else {
      std::cerr << "warning: pair " << k << ": frame unavailable; using identity\n";
    }
    relatives.push_back(rel);

    const auto t1 = std::chrono::steady_clock::now();
    pair_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    prev = std::move(next);
  }

  const Trajectory traj = accumulate_trajectory(relatives);
  const fs::path pose_path = opts.out_dir / "odometry_poses.txt";
  commit_atomic(pose_path, [&](const fs::path& tmp) { write_pose_file(traj, tmp); });

  commit_atomic(opts.out_dir / "timing.csv", [&](const fs::path& tmp) {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot open timing log for writing: " + tmp.string());
    out << "pair,milliseconds\n";
    out << std::setprecision(6) << std::fixed;
    for (std::size_t i = 0; i < pair_ms.size(); ++i) out << i << ',' << pair_ms[i] << '\n';
  });

  double total_ms = 0.0;
  for (double ms : pair_ms) total_ms += ms;
  std::cout << "estimated " << relatives.size() << " frame pairs with " << cfg.estimator
            << " (" << total_ms / static_cast<double>(pair_ms.size())
            << " ms/pair mean); poses written to " << pose_path.string() << "\n";

  if (gt) {
    const EvalReport report = kitti_metrics(traj, *gt);
    std::cout << format_report_table(report);
    commit_atomic(opts.out_dir / "report.json",
                  [&](const fs::path& tmp) { write_report_json(report, tmp); });
  }
  return kExitOk;
}

int run_synth(const fs::path& config, std::uint64_t seed, const fs::path& out_dir) {
  const SceneSpec spec = SceneSpec::from_file(config);
  const int frames = spec.motion ? spec.motion->frames : 1;
  fs::create_directories(out_dir);

  Trajectory gt;
  for (int k = 0; k < frames; ++k) {
    const Pose pose = spec.motion ? motion_pose(*spec.motion, k) : Pose::identity();
    const double time = spec.motion ? k * spec.motion->dt : 0.0;
    const PointCloud cloud = synth_scene(seed, spec, pose, time);
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.bin", k);
    commit_atomic(out_dir / name,
                  [&](const fs::path& tmp) { write_kitti_scan(cloud, tmp); });
    gt.absolute.push_back(pose);
  }
  commit_atomic(out_dir / "poses.txt",
                [&](const fs::path& tmp) { write_pose_file(gt, tmp); });
  std::cout << "wrote " << frames << " scans and poses.txt to " << out_dir.string() << "\n";
  return kExitOk;
}

int run_project(const PipelineConfig& cfg, const fs::path& scan, const fs::path& out_dir) {
  const PointCloud cloud = load_kitti_scan(scan);
  const SphericalImage raw = project(cloud, cfg.projection);
  std::size_t valid = 0;
  for (std::uint8_t v : raw.valid) valid += v;
  const SphericalImage completed = depth_completion(raw);
  const EqualizedImage eq = histogram_equalize(completed, cfg.projection);

  fs::create_directories(out_dir);
  commit_atomic(out_dir / "depth_raw.pgm",
                [&](const fs::path& tmp) { write_depth_pgm(raw, tmp); });
  commit_atomic(out_dir / "depth_completed.pgm",
                [&](const fs::path& tmp) { write_depth_pgm(completed, tmp); });
  commit_atomic(out_dir / "equalized.pgm",
                [&](const fs::path& tmp) { write_pgm(eq, tmp); });
  commit_atomic(out_dir / "index.csv",
                [&](const fs::path& tmp) { write_index_csv(raw, tmp); });

  std::cout << cloud.size() << " points -> " << raw.H << "x" << raw.W << " image, " << valid
            << " valid pixels, " << raw.dropped << " dropped; images written to "
            << out_dir.string() << "\n";
  return kExitOk;
}

int run_mkps(const PipelineConfig& cfg, const fs::path& scan_a, const fs::path& scan_b,
             const fs::path& out_file) {
  const std::unique_ptr<FrameData> a = prepare_frame(scan_a, cfg.projection, /*strict=*/true);
  const std::unique_ptr<FrameData> b = prepare_frame(scan_b, cfg.projection, /*strict=*/true);
  int shortfall = 0;
  const MKPSet mkps = extract_mkps(a->inputs(), b->inputs(), cfg.mkp_count, cfg.detector,
                                   cfg.matcher, &shortfall);
  commit_atomic(out_file, [&](const fs::path& tmp) { save_mkps(mkps, tmp); });
  std::cout << "extracted " << mkps.size() << " matched keypoint pairs";
  if (shortfall > 0) std::cout << " (" << shortfall << " short of requested)";
  std::cout << "; written to " << out_file.string() << "\n";
  return kExitOk;
}

int run_train(const PipelineConfig& cfg, std::uint64_t seed, const fs::path& out_dir) {
  if (cfg.poses_path.empty()) {
    std::cerr << "error: training needs ground-truth poses ([paths] poses)\n";
    return kExitUsage;
  }
  const std::vector<fs::path> scans = list_scans(cfg.scans_dir);
  if (scans.size() < 2) {
    throw FormatError("need at least 2 scans in " + cfg.scans_dir.string() + ", found " +
                      std::to_string(scans.size()));
  }
  std::vector<std::string> warnings;
  const Trajectory gt = read_pose_file(cfg.poses_path, &warnings);
  for (const std::string& w : warnings) {
    std::cerr << "warning: " << cfg.poses_path.string() << ": " << w << "\n";
  }
  if (gt.size() != scans.size()) {
    throw FormatError("pose file has " + std::to_string(gt.size()) + " frames but " +
                      std::to_string(scans.size()) + " scans were found");
  }

  std::vector<TrainSample> dataset;
  std::unique_ptr<FrameData> prev = prepare_frame(scans[0], cfg.projection, false);
  for (std::size_t k = 0; k + 1 < scans.size(); ++k) {
    std::unique_ptr<FrameData> next = prepare_frame(scans[k + 1], cfg.projection, false);
    if (prev && next) {
      try {
        const MKPSet mkps = extract_mkps(prev->inputs(), next->inputs(), cfg.mkp_count,
                                         cfg.detector, cfg.matcher);
        // Transform taking frame-k points onto their frame-(k+1) matches.
        const Pose forward = compose(inverse(gt.absolute[k + 1]), gt.absolute[k]);
        dataset.push_back({label_mkps(mkps, forward, cfg.label_threshold), forward});
      } catch (const DegenerateFramePair& e) {
        std::cerr << "warning: pair " << k << ": " << e.what() << "; skipped\n";
      }
    }
    prev = std::move(next);
  }
  if (dataset.empty()) {
    throw FormatError("no usable frame pairs for training in " + cfg.scans_dir.string());
  }

  TrainConfig tc = cfg.train;
  tc.seed = seed;
  const TrainedModels models = train(dataset, tc);

  save_checkpoint_atomic(models.selection, out_dir / "selection.bin");
  save_checkpoint_atomic(models.rotation, out_dir / "rotation.bin");
  save_checkpoint_atomic(models.translation, out_dir / "translation.bin");
  commit_atomic(out_dir / "loss.csv",
                [&](const fs::path& tmp) { save_loss_csv(models.curve, tmp); });

  std::cout << "trained on " << dataset.size() << " frame pairs for " << tc.epochs
            << " epochs; checkpoints and loss.csv written to " << out_dir.string() << "\n";
  return kExitOk;
}

int run_eval(const fs::path& est_path, const fs::path& gt_path, const fs::path& out_file) {
  std::vector<std::string> warnings;
  const Trajectory est = read_pose_file(est_path, &warnings);
  const Trajectory gt = read_pose_file(gt_path, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

  EvalReport report;
  try {
    report = kitti_metrics(est, gt);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  std::cout << format_report_table(report);
  if (!out_file.empty()) {
    commit_atomic(out_file, [&](const fs::path& tmp) { write_report_json(report, tmp); });
    std::cout << "report written to " << out_file.string() << "\n";
  }
  return kExitOk;
}

int run_plot(const std::vector<fs::path>& pose_paths, const fs::path& out_prefix) {
  std::vector<std::pair<std::string, Trajectory>> trajs;
  for (const fs::path& p : pose_paths) {
    std::string name = p.stem().string();
    for (const auto& [existing, _] : trajs) {
      if (existing == name) {
        name += "#" + std::to_string(trajs.size());
        break;
      }
    }
    trajs.emplace_back(name, read_pose_file(p));
  }
  const fs::path csv = out_prefix.string() + ".csv";
  const fs::path svg = out_prefix.string() + ".svg";
  // The exporter writes both files; commit each atomically.
  const fs::path csv_tmp = csv.string() + ".tmp";
  const fs::path svg_tmp = svg.string() + ".tmp";
  if (!csv.parent_path().empty()) fs::create_directories(csv.parent_path());
  export_trajectory_plot(trajs, csv_tmp, svg_tmp);
  fs::rename(csv_tmp, csv);
  fs::rename(svg_tmp, svg);
  std::cout << "plot data written to " << csv.string() << " and " << svg.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR range-image odometry toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string estimator_override;
  bool strict = false;
  std::string out;

  app.add_option("--config", config_path, "INI config file");
  app.add_option("--seed", seed, "random seed (default 0)");
  app.add_option("--estimator", estimator_override,
                 "override [estimator] type: closed_form_ransac | icp_baseline | neural");
  app.add_flag("--strict", strict, "abort on frame failures instead of skipping");
  app.add_option("--out", out, "output directory / file / prefix (per subcommand)");

  CLI::App* synth = app.add_subcommand("synth", "render a synthetic scan sequence");
  CLI::App* project = app.add_subcommand("project", "project one scan to a depth image");
  std::string project_scan;
  project->add_option("--scan", project_scan, "point cloud (.bin)")->required();
  CLI::App* mkps = app.add_subcommand("mkps", "extract matched keypoint pairs from two scans");
  std::string scan_a, scan_b;
  mkps->add_option("--scan-a", scan_a, "first scan (.bin)")->required();
  mkps->add_option("--scan-b", scan_b, "second scan (.bin)")->required();
  CLI::App* odometry = app.add_subcommand("odometry", "run odometry over a scan directory");
  CLI::App* train_cmd = app.add_subcommand("train", "train the selection/rotation/translation nets");
  CLI::App* eval_cmd = app.add_subcommand("eval", "compare an estimated pose file to ground truth");
  std::string est_path, gt_path;
  eval_cmd->add_option("--est", est_path, "estimated pose file")->required();
  eval_cmd->add_option("--gt", gt_path, "ground-truth pose file")->required();
  CLI::App* plot = app.add_subcommand("plot", "export trajectory plot data (CSV + SVG)");
  std::vector<std::string> plot_poses;
  plot->add_option("--poses", plot_poses, "pose file (repeatable)")->required();

  for (CLI::App* sub : {synth, project, mkps, odometry, train_cmd, eval_cmd, plot}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto need_config = [&]() -> PipelineConfig {
      if (config_path.empty()) {
        throw ConfigError("--config is required for this subcommand");
      }
      PipelineConfig cfg = PipelineConfig::from_file(config_path);
      if (!estimator_override.empty()) {
        cfg.estimator = estimator_override;
        cfg.validate();
      }
      return cfg;
    };

    if (synth->parsed()) {
      if (config_path.empty()) throw ConfigError("--config is required for synth");
      fs::path out_dir = out;
      if (out_dir.empty()) {
        // Fall back to the [paths] scans_dir of a combined pipeline config.
        const IniDoc doc = load_ini(config_path);
        if (const IniSection* s = doc.find("paths")) {
          out_dir = s->get_string("scans_dir", "");
        }
        if (out_dir.empty()) throw ConfigError("synth needs --out or [paths] scans_dir");
      }
      return run_synth(config_path, seed, out_dir);
    }
    if (project->parsed()) {
      const PipelineConfig cfg = need_config();
      return run_project(cfg, project_scan, out.empty() ? cfg.out_dir : fs::path(out));
    }
    if (mkps->parsed()) {
      const PipelineConfig cfg = need_config();
      const fs::path out_file = out.empty() ? cfg.out_dir / "mkps.csv" : fs::path(out);
      return run_mkps(cfg, scan_a, scan_b, out_file);
    }
    if (odometry->parsed()) {
      const PipelineConfig cfg = need_config();
      OdometryOpts opts;
      opts.seed = seed;
      opts.strict = strict;
      opts.out_dir = out.empty() ? cfg.out_dir : fs::path(out);
      return run_odometry(cfg, opts);
    }
    if (train_cmd->parsed()) {
      const PipelineConfig cfg = need_config();
      return run_train(cfg, seed, out.empty() ? cfg.out_dir : fs::path(out));
    }
    if (eval_cmd->parsed()) {
      return run_eval(est_path, gt_path, out);
    }
    if (plot->parsed()) {
      std::vector<fs::path> paths(plot_poses.begin(), plot_poses.end());
      return run_plot(paths, out.empty() ? fs::path("trajectories") : fs::path(out));
    }
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const StrictAbort& e) {
    std::cerr << "error: " << e.message << " (--strict)\n";
    return kExitEstimation;
  } catch (const RobustEstimationFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const DegenerateFramePair& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const DegenerateGeometry& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
