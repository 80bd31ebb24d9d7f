#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "rilo/config.hpp"
#include "rilo/errors.hpp"
#include "rilo/ini.hpp"

using namespace rilo;

namespace {

std::filesystem::path temp_ini(const std::string& text) {
  static int counter = 0;
  const auto path = std::filesystem::temp_directory_path() /
                    ("rilo_ini_" + std::to_string(++counter) + ".ini");
  std::ofstream out(path);
  out << text;
  return path;
}

}  // namespace

TEST_SUITE("ini_config") {
  TEST_CASE("sections, comments, and whitespace parse as documented") {
    const IniDoc doc = parse_ini(
        "# leading comment\n"
        "top_key = 1\n"
        "\n"
        "[scanner]\n"
        "rings = 64   ; trailing comment\n"
        "origin = 0.5 0.0 -1.7\n"
        "name =  spinning unit  \n"
        "[box]\n"
        "size = 1 2 3\n"
        "[box]\n"
        "size = 4 5 6\n");
    REQUIRE(doc.sections.size() == 3 + 1);  // implicit top section + three headers
    CHECK(doc.sections[0].name.empty());
    CHECK(doc.sections[0].get_int("top_key") == 1);

    const IniSection* scanner = doc.find("scanner");
    REQUIRE(scanner != nullptr);
    CHECK(scanner->get_int("rings") == 64);
    CHECK(scanner->get_vec3("origin") == Eigen::Vector3d(0.5, 0.0, -1.7));
    CHECK(scanner->get_string("name") == "spinning unit");
    CHECK(scanner->line == 4);

    const auto boxes = doc.find_all("box");
    REQUIRE(boxes.size() == 2);
    CHECK(boxes[0]->get_vec3("size") == Eigen::Vector3d(1, 2, 3));
    CHECK(boxes[1]->get_vec3("size") == Eigen::Vector3d(4, 5, 6));
  }

  TEST_CASE("typed lookups fall back and bools accept common spellings") {
    const IniDoc doc = parse_ini(
        "[s]\n"
        "yes1 = true\nyes2 = 1\nyes3 = on\n"
        "no1 = false\nno2 = 0\nno3 = off\n"
        "pi = 3.5\n");
    const IniSection& s = *doc.find("s");
    CHECK(s.get_bool("yes1"));
    CHECK(s.get_bool("yes2"));
    CHECK(s.get_bool("yes3"));
    CHECK(!s.get_bool("no1"));
    CHECK(!s.get_bool("no2"));
    CHECK(!s.get_bool("no3"));
    CHECK(s.get_double("pi") == 3.5);
    CHECK(s.get_double("absent", 2.25) == 2.25);
    CHECK(s.get_int("absent", 7) == 7);
    CHECK(s.get_string("absent", "d") == "d");
    CHECK(!s.has("absent"));
    CHECK(s.has("pi"));
  }

  TEST_CASE("malformed input names the line in the error") {
    try {
      parse_ini("[ok]\nkey = 1\nthis line has no equals\n", "sample.ini");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("3") != std::string::npos);
      CHECK(msg.find("sample.ini") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_ini("[unclosed\n"), ConfigError);
  }

  TEST_CASE("typed conversion failures report section and key") {
    const IniDoc doc = parse_ini("[scan]\nrings = sixty-four\n");
    try {
      doc.find("scan")->get_int("rings");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("scan") != std::string::npos);
      CHECK(msg.find("rings") != std::string::npos);
    }
    CHECK_THROWS_AS(doc.find("scan")->get_double("absent"), ConfigError);
    CHECK_THROWS_AS(parse_ini("[v]\np = 1 2\n").find("v")->get_vec3("p"), ConfigError);
  }

  TEST_CASE("load_ini round-trips through a file and missing files raise IoError") {
    const auto path = temp_ini("[a]\nk = 42\n");
    const IniDoc doc = load_ini(path);
    CHECK(doc.find("a")->get_int("k") == 42);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_ini("/nonexistent/rilo.ini"), IoError);
  }

  TEST_CASE("an empty document yields every pipeline default") {
    const PipelineConfig cfg = PipelineConfig::from_ini(parse_ini(""));
    CHECK(cfg.mkp_count == 1000);
    CHECK(cfg.selection_k == 100);
    CHECK(cfg.label_threshold == 0.1);
    CHECK(cfg.estimator == "closed_form_ransac");
    CHECK(cfg.ransac.iterations == 500);
    CHECK(cfg.ransac.inlier_threshold == 0.1);
    CHECK(cfg.icp.max_iter == 50);
    CHECK(cfg.out_dir == ".");
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("pipeline fields come from their sections") {
    const PipelineConfig cfg = PipelineConfig::from_ini(parse_ini(
        "[projection]\nrows = 32\ncols = 512\nelev_min_deg = -20\nelev_max_deg = 10\n"
        "[mkp]\ncount = 200\nselect = 50\nlabel_threshold = 0.25\n"
        "[ransac]\niterations = 99\ninlier_threshold = 0.2\nmin_inliers = 7\n"
        "[icp]\nmax_iterations = 10\n"
        "[estimator]\ntype = icp_baseline\n"
        "[paths]\nscans_dir = /data/scans\nout_dir = /tmp/out\nposes = /data/poses.txt\n"));
    CHECK(cfg.projection.H == 32);
    CHECK(cfg.projection.W == 512);
    CHECK(cfg.projection.elev_min == doctest::Approx(-20.0 * M_PI / 180.0));
    CHECK(cfg.projection.elev_max == doctest::Approx(10.0 * M_PI / 180.0));
    CHECK(cfg.mkp_count == 200);
    CHECK(cfg.selection_k == 50);
    CHECK(cfg.label_threshold == 0.25);
    CHECK(cfg.ransac.iterations == 99);
    CHECK(cfg.ransac.inlier_threshold == 0.2);
    CHECK(cfg.ransac.min_inliers == 7);
    CHECK(cfg.icp.max_iter == 10);
    CHECK(cfg.estimator == "icp_baseline");
    CHECK(cfg.scans_dir == "/data/scans");
    CHECK(cfg.out_dir == "/tmp/out");
    CHECK(cfg.poses_path == "/data/poses.txt");
    CHECK(cfg.matcher.image_width == 512);  // gate wraps on the projected width
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("validate rejects inconsistent pipelines") {
    PipelineConfig cfg;
    cfg.estimator = "unknown_method";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = PipelineConfig{};
    cfg.selection_k = cfg.mkp_count + 1;  // cannot keep more than extracted
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = PipelineConfig{};
    cfg.selection_k = 2;  // below the three pairs a pose needs
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}
