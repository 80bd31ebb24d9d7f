#include "rilo/config.hpp"

#include <cmath>

#include "rilo/errors.hpp"

namespace rilo {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

void parse_projection(const IniSection& s, ProjectionConfig& cfg) {
  cfg.H = static_cast<int>(s.get_int("rows", cfg.H));
  cfg.W = static_cast<int>(s.get_int("cols", cfg.W));
  cfg.elev_min = s.get_double("elev_min_deg", cfg.elev_min / kDegToRad) * kDegToRad;
  cfg.elev_max = s.get_double("elev_max_deg", cfg.elev_max / kDegToRad) * kDegToRad;
  cfg.max_range = s.get_double("max_range", cfg.max_range);
  cfg.top_row_max_elevation = s.get_bool("top_row_max_elevation", cfg.top_row_max_elevation);
}

void parse_detector(const IniSection& s, SiftParams& p) {
  p.octaves = static_cast<int>(s.get_int("octaves", p.octaves));
  p.scales_per_octave = static_cast<int>(s.get_int("scales_per_octave", p.scales_per_octave));
  p.sigma0 = s.get_double("sigma0", p.sigma0);
  p.assumed_blur = s.get_double("assumed_blur", p.assumed_blur);
  p.contrast_threshold = s.get_double("contrast_threshold", p.contrast_threshold);
  p.edge_ratio = s.get_double("edge_ratio", p.edge_ratio);
  p.peak_ratio = s.get_double("peak_ratio", p.peak_ratio);
  p.max_refine_steps = static_cast<int>(s.get_int("max_refine_steps", p.max_refine_steps));
}

void parse_matcher(const IniSection& s, MatchParams& p) {
  p.ratio = s.get_double("ratio", p.ratio);
  p.mutual = s.get_bool("mutual", p.mutual);
  p.max_col_displacement =
      static_cast<int>(s.get_int("max_col_displacement", p.max_col_displacement));
}

void parse_ransac(const IniSection& s, RansacParams& p) {
  p.iterations = static_cast<int>(s.get_int("iterations", p.iterations));
  p.inlier_threshold = s.get_double("inlier_threshold", p.inlier_threshold);
  p.min_inliers = static_cast<int>(s.get_int("min_inliers", p.min_inliers));
}

void parse_icp(const IniSection& s, IcpParams& p) {
  p.max_iter = static_cast<int>(s.get_int("max_iterations", p.max_iter));
  p.tol = s.get_double("tolerance", p.tol);
  p.max_corr_dist = s.get_double("max_corr_dist", p.max_corr_dist);
}

void parse_train(const IniSection& s, TrainConfig& c) {
  c.batch_size = static_cast<int>(s.get_int("batch_size", c.batch_size));
  c.learning_rate = s.get_double("learning_rate", c.learning_rate);
  c.epochs = static_cast<int>(s.get_int("epochs", c.epochs));
  c.augment_ratio = s.get_double("augment_ratio", c.augment_ratio);
  c.beta_max = s.get_double("beta_max_deg", c.beta_max / kDegToRad) * kDegToRad;
  c.top_k = static_cast<int>(s.get_int("top_k", c.top_k));
}

void parse_paths(const IniSection& s, PipelineConfig& cfg) {
  cfg.scans_dir = s.get_string("scans_dir", cfg.scans_dir.string());
  cfg.poses_path = s.get_string("poses", cfg.poses_path.string());
  cfg.out_dir = s.get_string("out_dir", cfg.out_dir.string());
  cfg.model_dir = s.get_string("model_dir", cfg.model_dir.string());
}

}  // namespace

void PipelineConfig::validate() const {
  projection.validate();
  if (selection_k < 3) {
    throw ConfigError("[mkp] select must be >= 3, got " + std::to_string(selection_k));
  }
  if (mkp_count < selection_k) {
    throw ConfigError("[mkp] count (" + std::to_string(mkp_count) +
                      ") must be >= select (" + std::to_string(selection_k) + ")");
  }
  if (!(label_threshold > 0.0)) {
    throw ConfigError("[mkp] label_threshold must be positive");
  }
  if (ransac.iterations < 1) {
    throw ConfigError("[ransac] iterations must be >= 1");
  }
  if (!(ransac.inlier_threshold > 0.0)) {
    throw ConfigError("[ransac] inlier_threshold must be positive");
  }
  if (icp.max_iter < 1) {
    throw ConfigError("[icp] max_iterations must be >= 1");
  }
  if (estimator != "closed_form_ransac" && estimator != "icp_baseline" &&
      estimator != "neural") {
    throw ConfigError("[estimator] type must be closed_form_ransac, icp_baseline "
                      "or neural, got '" + estimator + "'");
  }
  train.validate();
}

PipelineConfig PipelineConfig::from_ini(const IniDoc& doc) {
  PipelineConfig cfg;
  if (const IniSection* s = doc.find("projection")) parse_projection(*s, cfg.projection);
  if (const IniSection* s = doc.find("detector")) parse_detector(*s, cfg.detector);
  if (const IniSection* s = doc.find("matcher")) parse_matcher(*s, cfg.matcher);
  if (const IniSection* s = doc.find("mkp")) {
    cfg.mkp_count = static_cast<int>(s->get_int("count", cfg.mkp_count));
    cfg.selection_k = static_cast<int>(s->get_int("select", cfg.selection_k));
    cfg.label_threshold = s->get_double("label_threshold", cfg.label_threshold);
  }
  if (const IniSection* s = doc.find("ransac")) parse_ransac(*s, cfg.ransac);
  if (const IniSection* s = doc.find("icp")) parse_icp(*s, cfg.icp);
  cfg.train.top_k = cfg.selection_k;
  if (const IniSection* s = doc.find("train")) parse_train(*s, cfg.train);
  if (const IniSection* s = doc.find("paths")) parse_paths(*s, cfg);
  if (const IniSection* s = doc.find("estimator")) {
    cfg.estimator = s->get_string("type", cfg.estimator);
  }
  // The column gate measures displacement on the projected image, so it needs
  // the image circumference.
  cfg.matcher.image_width = cfg.projection.W;
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
  return from_ini(load_ini(path));
}

}  // namespace rilo
