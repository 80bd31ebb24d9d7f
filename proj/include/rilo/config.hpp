#pragma once

#include <filesystem>
#include <string>

#include "rilo/estimation.hpp"
#include "rilo/ini.hpp"
#include "rilo/matching.hpp"
#include "rilo/projection.hpp"
#include "rilo/sift.hpp"
#include "rilo/train.hpp"

namespace rilo {

// Everything a pipeline run needs, assembled from one INI file (sections
// [projection], [detector], [matcher], [mkp], [ransac], [icp], [train],
// [paths], [estimator]; all keys optional with these defaults). Scene
// synthesis sections ([scanner], [plane], ...) may share the same file.
struct PipelineConfig {
  ProjectionConfig projection;
  SiftParams detector;
  MatchParams matcher;
  int mkp_count = 1000;         // pairs extracted per frame pair
  int selection_k = 100;        // pairs kept by the selection stage
  double label_threshold = 0.1; // meters; inlier cut for training labels
  RansacParams ransac;
  IcpParams icp;
  TrainConfig train;
  std::filesystem::path scans_dir;
  std::filesystem::path poses_path;  // ground truth, empty = none
  std::filesystem::path out_dir = ".";
  std::filesystem::path model_dir;   // checkpoints for the neural estimator
  std::string estimator = "closed_form_ransac";

  // Throws ConfigError unless mkp_count >= selection_k >= 3, the estimator
  // name is known, and the nested configs are self-consistent.
  void validate() const;

  static PipelineConfig from_ini(const IniDoc& doc);
  static PipelineConfig from_file(const std::filesystem::path& path);
};

}  // namespace rilo
