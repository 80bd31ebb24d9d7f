#include "rilo/projection.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "rilo/errors.hpp"
#include "rilo/kernels.hpp"

namespace rilo {

void ProjectionConfig::validate() const {
  if (H < 1 || W < 1) throw ConfigError("projection H and W must be >= 1");
  if (!(elev_min < elev_max)) throw ConfigError("projection elev_min must be below elev_max");
  if (!(max_range > 0)) throw ConfigError("projection max_range must be positive");
}

SphericalImage project(const PointCloud& cloud, const ProjectionConfig& cfg) {
  cfg.validate();
  SphericalImage img;
  img.H = cfg.H;
  img.W = cfg.W;
  img.config = cfg;
  const std::size_t npix = static_cast<std::size_t>(cfg.H) * cfg.W;
  img.depth.assign(npix, 0.0);
  img.valid.assign(npix, 0);
  img.index_map.assign(npix, -1);

  const std::size_t n = cloud.size();
  std::vector<double> range(n);
  if (n > 0) kernels::active().range3(cloud.x.data(), cloud.y.data(), cloud.z.data(), n, range.data());

  const double da = cfg.dalpha();
  const double db = cfg.dbeta();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = range[i];
    if (!(r > 0.0)) {
      ++img.dropped;
      continue;
    }
    const double alpha = std::asin(cloud.z[i] / r);
    if (alpha < cfg.elev_min || alpha > cfg.elev_max) {
      ++img.dropped;
      continue;
    }
    int row = cfg.top_row_max_elevation
                  ? static_cast<int>(std::floor((cfg.elev_max - alpha) / da))
                  : static_cast<int>(std::floor((alpha - cfg.elev_min) / da));
    row = std::min(std::max(row, 0), cfg.H - 1);

    const double beta = std::atan2(cloud.y[i], cloud.x[i]);
    int col = static_cast<int>(std::floor((beta + M_PI) / db));
    col = std::min(std::max(col, 0), cfg.W - 1);

    const std::size_t p = img.idx(row, col);
    if (!img.valid[p] || r < img.depth[p]) {
      img.depth[p] = r;
      img.valid[p] = 1;
      img.index_map[p] = static_cast<std::int32_t>(i);
    }
  }
  return img;
}

std::optional<Eigen::Vector3d> back_project(const SphericalImage& image, int row, int col,
                                            const PointCloud& cloud) {
  if (row < 0 || row >= image.H || col < 0 || col >= image.W)
    throw std::out_of_range("back_project: pixel (" + std::to_string(row) + "," +
                            std::to_string(col) + ") outside " + std::to_string(image.H) + "x" +
                            std::to_string(image.W) + " image");
  const std::size_t p = image.idx(row, col);
  if (!image.valid[p]) return std::nullopt;
  return cloud.point(static_cast<std::size_t>(image.index_map[p]));
}

SphericalImage depth_completion(const SphericalImage& image) {
  const int H = image.H, W = image.W;
  SphericalImage out = image;

  // Per source row, the nearest valid column at or left / at or right of each
  // column. Together with a scan over source rows this enumerates, for every
  // void pixel, the closest valid pixel per row — exact integer arithmetic,
  // so the distance ties break precisely toward the smaller row-major index.
  std::vector<std::int32_t> left(static_cast<std::size_t>(H) * W, -1);
  std::vector<std::int32_t> right(static_cast<std::size_t>(H) * W, -1);
  bool any_valid = false;
  for (int r = 0; r < H; ++r) {
    std::int32_t last = -1;
    for (int c = 0; c < W; ++c) {
      if (image.valid[image.idx(r, c)]) last = c;
      left[image.idx(r, c)] = last;
    }
    last = -1;
    for (int c = W - 1; c >= 0; --c) {
      if (image.valid[image.idx(r, c)]) last = c;
      right[image.idx(r, c)] = last;
    }
    any_valid = any_valid || left[image.idx(r, W - 1)] >= 0;
  }
  if (!any_valid) throw DegenerateGeometry("depth completion: image has no valid pixels");

  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      if (image.valid[image.idx(r, c)]) continue;
      long best_d2 = std::numeric_limits<long>::max();
      long best_idx = -1;
      for (int r2 = 0; r2 < H; ++r2) {
        const long dr2 = static_cast<long>(r2 - r) * (r2 - r);
        if (dr2 >= best_d2) continue;  // rows can only add distance
        const std::int32_t cands[2] = {left[image.idx(r2, c)], right[image.idx(r2, c)]};
        for (const std::int32_t c2 : cands) {
          if (c2 < 0) continue;
          const long d2 = dr2 + static_cast<long>(c2 - c) * (c2 - c);
          const long idx = static_cast<long>(r2) * W + c2;
          if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
            best_d2 = d2;
            best_idx = idx;
          }
        }
      }
      out.depth[image.idx(r, c)] = image.depth[static_cast<std::size_t>(best_idx)];
    }
  }
  return out;
}

EqualizedImage histogram_equalize(const SphericalImage& completed, const ProjectionConfig& cfg) {
  const std::size_t n = completed.depth.size();
  EqualizedImage out;
  out.H = completed.H;
  out.W = completed.W;
  out.source = &completed;
  out.gray.resize(n);

  std::vector<int> bin_of(n);
  std::size_t hist[256] = {};
  for (std::size_t i = 0; i < n; ++i) {
    double d = std::min(std::max(completed.depth[i], 0.0), cfg.max_range);
    int b = std::min(255, static_cast<int>(std::floor(d / cfg.max_range * 256.0)));
    bin_of[i] = b;
    ++hist[b];
  }
  std::size_t cdf[256];
  std::size_t run = 0, cdf_min = 0;
  for (int b = 0; b < 256; ++b) {
    run += hist[b];
    cdf[b] = run;
    if (cdf_min == 0 && hist[b] > 0) cdf_min = cdf[b];
  }
  const std::size_t denom = n > cdf_min ? n - cdf_min : 1;  // constant image guard
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t num = cdf[bin_of[i]] - cdf_min;
    out.gray[i] = static_cast<std::uint8_t>(
        std::lround(static_cast<double>(num) / static_cast<double>(denom) * 255.0));
  }
  return out;
}

namespace {

void write_pgm_bytes(const std::vector<std::uint8_t>& gray, int H, int W,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open image file for writing: " + path.string());
  out << "P5\n" << W << " " << H << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_pgm(const EqualizedImage& image, const std::filesystem::path& path) {
  write_pgm_bytes(image.gray, image.H, image.W, path);
}

void write_depth_pgm(const SphericalImage& image, const std::filesystem::path& path) {
  std::vector<std::uint8_t> gray(image.depth.size());
  const double scale = 255.0 / image.config.max_range;
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const double d = std::min(std::max(image.depth[i], 0.0), image.config.max_range);
    gray[i] = static_cast<std::uint8_t>(std::lround(d * scale));
  }
  write_pgm_bytes(gray, image.H, image.W, path);
}

void write_index_csv(const SphericalImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open csv file for writing: " + path.string());
  out << "row,col,index\n";
  for (int r = 0; r < image.H; ++r)
    for (int c = 0; c < image.W; ++c)
      out << r << "," << c << "," << image.index_map[image.idx(r, c)] << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace rilo
