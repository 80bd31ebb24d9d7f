#include "rilo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rilo/errors.hpp"

namespace rilo {

namespace {

constexpr double kSegmentLengths[] = {100, 200, 300, 400, 500, 600, 700, 800};
constexpr std::size_t kNoFrame = std::numeric_limits<std::size_t>::max();

std::vector<double> arc_lengths(const Trajectory& gt) {
  std::vector<double> dist(gt.size(), 0.0);
  for (std::size_t i = 1; i < gt.size(); ++i) {
    dist[i] = dist[i - 1] +
              (gt.absolute[i].translation - gt.absolute[i - 1].translation).norm();
  }
  return dist;
}

// First frame at or beyond `start` whose arc length from `start` reaches
// `length`; kNoFrame when the trajectory ends first.
std::size_t segment_end(const std::vector<double>& dist, std::size_t start,
                        double length) {
  const double target = dist[start] + length;
  for (std::size_t i = start + 1; i < dist.size(); ++i) {
    if (dist[i] >= target) return i;
  }
  return kNoFrame;
}

}  // namespace

EvalReport kitti_metrics(const Trajectory& est, const Trajectory& gt) {
  if (est.size() != gt.size()) {
    throw std::invalid_argument("kitti_metrics: trajectory sizes differ (" +
                                std::to_string(est.size()) + " vs " +
                                std::to_string(gt.size()) + ")");
  }
  if (gt.size() < 2) {
    throw std::invalid_argument("kitti_metrics: need at least 2 frames");
  }

  const std::vector<double> dist = arc_lengths(gt);

  EvalReport report;
  report.frames = gt.size();
  report.path_length = dist.back();

  double t_sum = 0.0;
  double r_sum = 0.0;
  int total = 0;
  for (double length : kSegmentLengths) {
    double t_len = 0.0;
    double r_len = 0.0;
    int count = 0;
    for (std::size_t start = 0; start < gt.size(); ++start) {
      const std::size_t end = segment_end(dist, start, length);
      if (end == kNoFrame) break;  // later starts cannot fit either
      const Pose delta_gt = compose(inverse(gt.absolute[start]), gt.absolute[end]);
      const Pose delta_est = compose(inverse(est.absolute[start]), est.absolute[end]);
      const Pose error = compose(inverse(delta_est), delta_gt);
      t_len += error.translation.norm() / length;
      r_len += rotation_angle(error.rotation) / length;
      ++count;
    }
    if (count == 0) continue;
    SegmentStats stats;
    stats.length = length;
    stats.count = count;
    stats.t_rel_percent = 100.0 * t_len / count;
    stats.r_rel_deg_per_100m =
        (r_len / count) * (180.0 / std::numbers::pi) * 100.0;
    report.breakdown.push_back(stats);
    t_sum += t_len;
    r_sum += r_len;
    total += count;
  }

  if (total == 0) {
    report.short_path = true;
    return report;
  }
  report.t_rel_percent = 100.0 * t_sum / total;
  report.r_rel_deg_per_100m =
      (r_sum / total) * (180.0 / std::numbers::pi) * 100.0;
  return report;
}

Trajectory read_pose_file(const std::filesystem::path& path,
                          std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pose file: " + path.string());

  Trajectory traj;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    double v[12];
    for (int i = 0; i < 12; ++i) {
      if (!(ss >> v[i])) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": expected 12 floats per pose line");
      }
    }
    double extra;
    if (ss >> extra) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 12 floats per pose line");
    }
    Pose p;
    p.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    p.translation << v[3], v[7], v[11];
    const std::size_t frame = traj.absolute.size();
    const double defect =
        (p.rotation.transpose() * p.rotation - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff();
    if (defect > 1e-3 && warnings != nullptr) {
      std::ostringstream w;
      w << "frame " << frame << ": rotation block is not orthonormal (defect "
        << std::setprecision(3) << defect << ")";
      warnings->push_back(w.str());
    }
    traj.absolute.push_back(p);
  }
  return traj;
}

void write_pose_file(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open pose file for writing: " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Pose& p : traj.absolute) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << p.rotation(r, c) << ' ';
      out << p.translation(r);
      out << (r == 2 ? '\n' : ' ');
    }
  }
  if (!out) throw IoError("failed writing pose file: " + path.string());
}

void export_trajectory_plot(const std::vector<std::pair<std::string, Trajectory>>& trajs,
                            const std::filesystem::path& csv_path,
                            const std::filesystem::path& svg_path) {
  {
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot open plot csv for writing: " + csv_path.string());
    csv << "name,frame,x,z\n";
    csv << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& [name, traj] : trajs) {
      for (std::size_t i = 0; i < traj.size(); ++i) {
        csv << name << ',' << i << ',' << traj.absolute[i].translation.x() << ','
            << traj.absolute[i].translation.z() << '\n';
      }
    }
    if (!csv) throw IoError("failed writing plot csv: " + csv_path.string());
  }

  double min_x = 0.0, max_x = 0.0, min_z = 0.0, max_z = 0.0;
  bool first = true;
  for (const auto& [name, traj] : trajs) {
    (void)name;
    for (const Pose& p : traj.absolute) {
      const double x = p.translation.x();
      const double z = p.translation.z();
      if (first) {
        min_x = max_x = x;
        min_z = max_z = z;
        first = false;
      } else {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_z = std::min(min_z, z);
        max_z = std::max(max_z, z);
      }
    }
  }
  const double span_x = std::max(max_x - min_x, 1e-9);
  const double span_z = std::max(max_z - min_z, 1e-9);
  const double span = std::max(span_x, span_z);  // uniform scale on both axes
  constexpr double kSize = 720.0;
  constexpr double kMargin = 60.0;
  const double scale = (kSize - 2.0 * kMargin) / span;
  const auto sx = [&](double x) { return kMargin + (x - min_x) * scale; };
  const auto sy = [&](double z) { return kSize - kMargin - (z - min_z) * scale; };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
  constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

  std::ofstream svg(svg_path);
  if (!svg) throw IoError("cannot open plot svg for writing: " + svg_path.string());
  svg << std::setprecision(8);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize
      << "\" height=\"" << kSize << "\" viewBox=\"0 0 " << kSize << ' ' << kSize
      << "\">\n";
  svg << "  <rect width=\"" << kSize << "\" height=\"" << kSize
      << "\" fill=\"white\"/>\n";
  svg << "  <rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
      << kSize - 2 * kMargin << "\" height=\"" << kSize - 2 * kMargin
      << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  // Axis scale: extreme coordinate labels in meters.
  svg << "  <text x=\"" << kMargin << "\" y=\"" << kSize - kMargin + 18
      << "\" font-size=\"12\" font-family=\"sans-serif\">x = " << min_x
      << " m</text>\n";
  svg << "  <text x=\"" << kSize - kMargin << "\" y=\"" << kSize - kMargin + 18
      << "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"end\">x = "
      << min_x + span << " m</text>\n";
  svg << "  <text x=\"" << kMargin - 6 << "\" y=\"" << kSize - kMargin
      << "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"end\">z = "
      << min_z << " m</text>\n";
  svg << "  <text x=\"" << kMargin - 6 << "\" y=\"" << kMargin + 4
      << "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"end\">z = "
      << min_z + span << " m</text>\n";

  std::size_t color = 0;
  for (const auto& [name, traj] : trajs) {
    const char* stroke = kPalette[color % kPaletteSize];
    svg << "  <polyline fill=\"none\" stroke=\"" << stroke
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < traj.size(); ++i) {
      if (i > 0) svg << ' ';
      svg << sx(traj.absolute[i].translation.x()) << ','
          << sy(traj.absolute[i].translation.z());
    }
    svg << "\"/>\n";
    // Legend entry: color swatch plus trajectory name.
    const double ly = kMargin + 16.0 + 18.0 * static_cast<double>(color);
    svg << "  <line x1=\"" << kMargin + 8 << "\" y1=\"" << ly << "\" x2=\""
        << kMargin + 32 << "\" y2=\"" << ly << "\" stroke=\"" << stroke
        << "\" stroke-width=\"3\"/>\n";
    svg << "  <text x=\"" << kMargin + 38 << "\" y=\"" << ly + 4
        << "\" font-size=\"13\" font-family=\"sans-serif\">" << name
        << "</text>\n";
    ++color;
  }
  svg << "</svg>\n";
  if (!svg) throw IoError("failed writing plot svg: " + svg_path.string());
}

void write_report_json(const EvalReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["t_rel_percent"] = report.t_rel_percent;
  j["r_rel_deg_per_100m"] = report.r_rel_deg_per_100m;
  j["frames"] = report.frames;
  j["path_length_m"] = report.path_length;
  j["short_path"] = report.short_path;
  j["breakdown"] = nlohmann::json::array();
  for (const SegmentStats& s : report.breakdown) {
    j["breakdown"].push_back({{"length_m", s.length},
                              {"count", s.count},
                              {"t_rel_percent", s.t_rel_percent},
                              {"r_rel_deg_per_100m", s.r_rel_deg_per_100m}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open report for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing report: " + path.string());
}

std::string format_report_table(const EvalReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::setw(10) << "length_m" << std::setw(10) << "segments"
     << std::setw(14) << "t_rel_%" << std::setw(18) << "r_rel_deg/100m"
     << '\n';
  for (const SegmentStats& s : report.breakdown) {
    os << std::setw(10) << std::setprecision(0) << s.length << std::setw(10)
       << s.count << std::setw(14) << std::setprecision(4) << s.t_rel_percent
       << std::setw(18) << s.r_rel_deg_per_100m << '\n';
  }
  os << std::setw(10) << "overall" << std::setw(10) << "-" << std::setw(14)
     << std::setprecision(4) << report.t_rel_percent << std::setw(18)
     << report.r_rel_deg_per_100m << '\n';
  if (report.short_path) {
    os << "note: path shorter than 100 m; relative errors not defined\n";
  }
  os << "reference (KITTI seq. 09): t_rel " << std::setprecision(2)
     << kReferenceSeq09TRel << " %, r_rel " << kReferenceSeq09RRel
     << " deg/100m\n";
  return os.str();
}

}  // namespace rilo
