#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rilo/errors.hpp"
#include "rilo/metrics.hpp"
#include "rilo/rng.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

using namespace rilo;

namespace {

// Straight track along +x, one pose per meter.
Trajectory straight_line(int frames, double step = 1.0) {
  Trajectory t;
  for (int k = 0; k < frames; ++k) {
    Pose p;
    p.translation = {k * step, 0.0, 0.0};
    t.absolute.push_back(p);
  }
  return t;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("a trajectory scored against itself has zero error") {
    const Trajectory gt = straight_line(150);
    const EvalReport report = kitti_metrics(gt, gt);
    CHECK(report.t_rel_percent == 0.0);
    CHECK(report.r_rel_deg_per_100m == 0.0);
    CHECK(report.frames == 150);
    CHECK(report.path_length == doctest::Approx(149.0));
    CHECK(!report.short_path);
    REQUIRE(!report.breakdown.empty());
    CHECK(report.breakdown[0].length == 100.0);
    // starts 0..49 all fit a 100 m segment on a 149 m path
    CHECK(report.breakdown[0].count == 50);
  }

  TEST_CASE("a uniform 1 percent scale error scores exactly 1 percent") {
    const Trajectory gt = straight_line(201);
    Trajectory est = gt;
    for (Pose& p : est.absolute) p.translation *= 1.01;
    const EvalReport report = kitti_metrics(est, gt);
    CHECK(report.t_rel_percent == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.r_rel_deg_per_100m == doctest::Approx(0.0));
    // both 100 m and 200 m segments fit on a 200 m path
    REQUIRE(report.breakdown.size() == 2);
    CHECK(report.breakdown[0].t_rel_percent == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.breakdown[1].length == 200.0);
  }

  TEST_CASE("a pure heading error shows up in rotation only") {
    const Trajectory gt = straight_line(120);
    Trajectory est = gt;
    // 0.5 degree heading twist on every frame after the first
    const Eigen::Matrix3d twist = make_yaw(0.5 * M_PI / 180.0).rotation;
    for (std::size_t k = 1; k < est.size(); ++k) est.absolute[k].rotation = twist;
    const EvalReport report = kitti_metrics(est, gt);
    // every 100 m segment starting at frame 0 has the full twist; later
    // segments (twist vs twist) cancel, so the average is 0.5/19 per segment
    CHECK(report.r_rel_deg_per_100m > 0.0);
    CHECK(report.t_rel_percent == doctest::Approx(0.0));
  }

  TEST_CASE("relative errors ignore a global rigid alignment") {
    auto rng = seeded_engine(120);
    Trajectory gt = straight_line(130);
    Trajectory est = gt;
    // small random wobble on the estimate
    for (std::size_t k = 1; k < est.size(); ++k) {
      est.absolute[k].translation +=
          Eigen::Vector3d(uniform_real(rng, -0.05, 0.05), uniform_real(rng, -0.05, 0.05),
                          uniform_real(rng, -0.05, 0.05));
      est.absolute[k].rotation = build::random_pose(rng, 0.002, 0).rotation;
    }
    const EvalReport base = kitti_metrics(est, gt);

    const Pose g = build::random_pose(rng, 0.8, 25.0);
    Trajectory est_moved = est, gt_moved = gt;
    for (std::size_t k = 0; k < est.size(); ++k) {
      est_moved.absolute[k] = compose(g, est.absolute[k]);
      gt_moved.absolute[k] = compose(g, gt.absolute[k]);
    }
    const EvalReport moved = kitti_metrics(est_moved, gt_moved);
    CHECK(moved.t_rel_percent == doctest::Approx(base.t_rel_percent).epsilon(1e-9));
    CHECK(moved.r_rel_deg_per_100m == doctest::Approx(base.r_rel_deg_per_100m).epsilon(1e-9));
  }

  TEST_CASE("paths too short for a 100 m segment are flagged, not scored") {
    const Trajectory gt = straight_line(10);
    const EvalReport report = kitti_metrics(gt, gt);
    CHECK(report.short_path);
    CHECK(report.breakdown.empty());
    CHECK(report.t_rel_percent == 0.0);
    CHECK(report.path_length == doctest::Approx(9.0));
  }

  TEST_CASE("mismatched or tiny inputs are rejected") {
    const Trajectory a = straight_line(5);
    const Trajectory b = straight_line(6);
    CHECK_THROWS_AS(kitti_metrics(a, b), std::invalid_argument);
    CHECK_THROWS_AS(kitti_metrics(straight_line(1), straight_line(1)),
                    std::invalid_argument);
  }

  TEST_CASE("pose files: the identity line parses to the identity pose") {
    const auto path = temp_path("rilo_poses_identity.txt");
    {
      std::ofstream out(path);
      out << "1 0 0 0 0 1 0 0 0 0 1 0\n";
      out << "1 0 0 5 0 1 0 -2 0 0 1 0.25\n";
    }
    const Trajectory traj = read_pose_file(path);
    REQUIRE(traj.size() == 2);
    CHECK(traj.absolute[0].rotation == Eigen::Matrix3d::Identity());
    CHECK(traj.absolute[0].translation == Eigen::Vector3d::Zero());
    CHECK(traj.absolute[1].translation == Eigen::Vector3d(5, -2, 0.25));
    std::filesystem::remove(path);
  }

  TEST_CASE("pose files round-trip exactly") {
    auto rng = seeded_engine(121);
    Trajectory traj;
    traj.absolute.push_back(Pose::identity());
    for (int k = 0; k < 20; ++k) traj.absolute.push_back(build::random_pose(rng, 1.0, 40.0));
    const auto path = temp_path("rilo_poses_roundtrip.txt");
    write_pose_file(traj, path);
    const Trajectory back = read_pose_file(path);
    REQUIRE(back.size() == traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
      CHECK(back.absolute[k].rotation == traj.absolute[k].rotation);
      CHECK(back.absolute[k].translation == traj.absolute[k].translation);
    }
    std::filesystem::remove(path);
  }

  TEST_CASE("malformed pose lines name the offending line") {
    const auto path = temp_path("rilo_poses_bad.txt");
    {
      std::ofstream out(path);
      out << "1 0 0 0 0 1 0 0 0 0 1 0\n";
      out << "1 0 0 0 0 1 0 0 0 0 1\n";  // 11 fields
    }
    try {
      read_pose_file(path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    {
      std::ofstream out(path);
      out << "1 0 0 0 0 1 0 0 0 0 1 0 99\n";  // 13 fields
    }
    CHECK_THROWS_AS(read_pose_file(path), FormatError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_pose_file("/nonexistent/poses.txt"), IoError);
  }

  TEST_CASE("an off-orthonormal rotation block triggers a frame warning") {
    const auto path = temp_path("rilo_poses_warn.txt");
    {
      std::ofstream out(path);
      out << "1 0 0 0 0 1 0 0 0 0 1 0\n";
      out << "1.1 0 0 0 0 1 0 0 0 0 1 0\n";  // scaled first row
    }
    std::vector<std::string> warnings;
    const Trajectory traj = read_pose_file(path, &warnings);
    CHECK(traj.size() == 2);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("frame 1") != std::string::npos);
    std::filesystem::remove(path);
  }

  TEST_CASE("plot export: csv parses back to the input track") {
    auto rng = seeded_engine(122);
    Trajectory walk;
    Pose p;
    for (int k = 0; k < 100; ++k) {
      walk.absolute.push_back(p);
      p.translation += Eigen::Vector3d(uniform_real(rng, -1, 1), 0, uniform_real(rng, -1, 1));
    }
    const Trajectory single = straight_line(1);

    const auto csv_path = temp_path("rilo_plot.csv");
    const auto svg_path = temp_path("rilo_plot.svg");
    export_trajectory_plot({{"walk", walk}, {"single", single}}, csv_path, svg_path);

    std::ifstream csv(csv_path);
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == "name,frame,x,z");
    std::map<std::string, int> rows;
    std::vector<Eigen::Vector2d> walk_xy;
    while (std::getline(csv, line)) {
      std::istringstream ss(line);
      std::string name, frame, x, z;
      std::getline(ss, name, ',');
      std::getline(ss, frame, ',');
      std::getline(ss, x, ',');
      std::getline(ss, z, ',');
      ++rows[name];
      if (name == "walk") walk_xy.emplace_back(std::stod(x), std::stod(z));
    }
    CHECK(rows["walk"] == 100);
    CHECK(rows["single"] == 1);
    REQUIRE(walk_xy.size() == 100);
    for (int k = 0; k < 100; ++k) {
      CHECK(walk_xy[k].x() == walk.absolute[k].translation.x());
      CHECK(walk_xy[k].y() == walk.absolute[k].translation.z());
    }

    std::ifstream svg(svg_path);
    std::stringstream buf;
    buf << svg.rdbuf();
    const std::string body = buf.str();
    CHECK(body.find("<svg") != std::string::npos);
    CHECK(body.find("polyline") != std::string::npos);
    CHECK(body.find("walk") != std::string::npos);
    CHECK(body.find("single") != std::string::npos);

    std::filesystem::remove(csv_path);
    std::filesystem::remove(svg_path);
  }

  TEST_CASE("report json carries the headline numbers") {
    const Trajectory gt = straight_line(201);
    Trajectory est = gt;
    for (Pose& p : est.absolute) p.translation *= 1.01;
    const EvalReport report = kitti_metrics(est, gt);
    const auto path = temp_path("rilo_report.json");
    write_report_json(report, path);
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string body = buf.str();
    CHECK(body.find("t_rel_percent") != std::string::npos);
    CHECK(body.find("r_rel_deg_per_100m") != std::string::npos);
    CHECK(body.find("path_length") != std::string::npos);
    std::filesystem::remove(path);

    const std::string table = format_report_table(report);
    CHECK(table.find("100") != std::string::npos);  // the segment row
    CHECK(table.find("1.0") != std::string::npos);  // the headline error
  }
}
