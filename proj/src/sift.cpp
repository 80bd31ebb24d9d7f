#include "rilo/sift.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rilo/kernels.hpp"

namespace rilo {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

inline int wrap_col(int c, int cols) {
  c %= cols;
  return c < 0 ? c + cols : c;
}

struct Level {
  int rows = 0, cols = 0;
  std::vector<float> v;

  float at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  // Column access with horizontal wrap (the image is a full-circle scan).
  float atc(int r, int c) const { return at(r, wrap_col(c, cols)); }
};

struct Octave {
  std::vector<Level> gauss;  // scales_per_octave + 3 levels
  std::vector<Level> dog;    // scales_per_octave + 2 levels
};

std::vector<float> gaussian_taps(double sigma, int& radius) {
  radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<float> taps(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-(k * k) / (2.0 * sigma * sigma));
    taps[k + radius] = static_cast<float>(w);
    sum += w;
  }
  for (float& t : taps) t = static_cast<float>(t / sum);
  return taps;
}

// Separable blur: cyclic columns, clamped rows.
Level blur(const Level& src, double sigma) {
  int radius = 0;
  const std::vector<float> taps = gaussian_taps(sigma, radius);
  const auto& K = kernels::active();

  Level tmp{src.rows, src.cols, std::vector<float>(src.v.size())};
  std::vector<float> padded(src.cols + 2 * radius);
  for (int r = 0; r < src.rows; ++r) {
    for (int i = 0; i < src.cols + 2 * radius; ++i)
      padded[i] = src.at(r, wrap_col(i - radius, src.cols));
    K.conv_row_valid(padded.data(), &tmp.v[static_cast<std::size_t>(r) * src.cols],
                     static_cast<std::size_t>(src.cols), taps.data(), radius);
  }
  Level dst{src.rows, src.cols, std::vector<float>(src.v.size())};
  K.conv_col_clamp(tmp.v.data(), dst.v.data(), static_cast<std::size_t>(src.rows),
                   static_cast<std::size_t>(src.cols), taps.data(), radius);
  return dst;
}

Level downsample(const Level& src) {
  Level dst{src.rows / 2, src.cols / 2, {}};
  dst.v.resize(static_cast<std::size_t>(dst.rows) * dst.cols);
  for (int r = 0; r < dst.rows; ++r)
    for (int c = 0; c < dst.cols; ++c)
      dst.v[static_cast<std::size_t>(r) * dst.cols + c] = src.at(2 * r, 2 * c);
  return dst;
}

std::vector<Octave> build_pyramid(const EqualizedImage& image, const SiftParams& p) {
  const int s = p.scales_per_octave;
  Level base{image.H, image.W, std::vector<float>(image.gray.size())};
  for (std::size_t i = 0; i < image.gray.size(); ++i)
    base.v[i] = static_cast<float>(image.gray[i]) / 255.0f;
  base = blur(base, std::sqrt(std::max(p.sigma0 * p.sigma0 - p.assumed_blur * p.assumed_blur,
                                       0.01)));

  // Incremental blurs within an octave: level l sits at sigma0 * 2^(l/s).
  std::vector<double> inc(s + 3, 0.0);
  double prev = p.sigma0;
  for (int l = 1; l < s + 3; ++l) {
    const double total = p.sigma0 * std::pow(2.0, static_cast<double>(l) / s);
    inc[l] = std::sqrt(total * total - prev * prev);
    prev = total;
  }

  std::vector<Octave> pyr(p.octaves);
  for (int o = 0; o < p.octaves; ++o) {
    Octave& oct = pyr[o];
    oct.gauss.resize(s + 3);
    oct.gauss[0] = (o == 0) ? std::move(base) : downsample(pyr[o - 1].gauss[s]);
    for (int l = 1; l < s + 3; ++l) oct.gauss[l] = blur(oct.gauss[l - 1], inc[l]);
    oct.dog.resize(s + 2);
    for (int l = 0; l < s + 2; ++l) {
      const Level& a = oct.gauss[l];
      const Level& b = oct.gauss[l + 1];
      Level d{a.rows, a.cols, std::vector<float>(a.v.size())};
      for (std::size_t i = 0; i < a.v.size(); ++i) d.v[i] = b.v[i] - a.v[i];
      oct.dog[l] = std::move(d);
    }
  }
  return pyr;
}

bool is_extremum(const Octave& oct, int l, int r, int c) {
  const float v = oct.dog[l].at(r, c);
  const bool pos = v > 0.0f;
  for (int dl = -1; dl <= 1; ++dl)
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (dl == 0 && dr == 0 && dc == 0) continue;
        const float n = oct.dog[l + dl].atc(r + dr, c + dc);
        if (pos ? (v <= n) : (v >= n)) return false;
      }
  return true;
}

struct Refined {
  int l = 0, r = 0, c = 0;       // converged integer location
  double dl = 0, dr = 0, dc = 0; // sub-pixel offsets, each in (-0.5, 0.5]
  double contrast = 0.0;
};

bool refine(const Octave& oct, const SiftParams& p, int l, int r, int c, Refined& out) {
  const int rows = oct.dog[0].rows, cols = oct.dog[0].cols;
  const int s = p.scales_per_octave;
  Eigen::Vector3d g;       // (d/dr, d/dc, d/dl)
  Eigen::Vector3d delta = Eigen::Vector3d::Zero();
  for (int step = 0; step < p.max_refine_steps; ++step) {
    const Level& D = oct.dog[l];
    const Level& Dp = oct.dog[l + 1];
    const Level& Dm = oct.dog[l - 1];
    const double v = D.at(r, c);
    g[0] = 0.5 * (D.atc(r + 1, c) - D.atc(r - 1, c));
    g[1] = 0.5 * (D.atc(r, c + 1) - D.atc(r, c - 1));
    g[2] = 0.5 * (Dp.at(r, c) - Dm.at(r, c));

    Eigen::Matrix3d H;
    H(0, 0) = D.atc(r + 1, c) + D.atc(r - 1, c) - 2.0 * v;
    H(1, 1) = D.atc(r, c + 1) + D.atc(r, c - 1) - 2.0 * v;
    H(2, 2) = Dp.at(r, c) + Dm.at(r, c) - 2.0 * v;
    H(0, 1) = H(1, 0) = 0.25 * (D.atc(r + 1, c + 1) - D.atc(r + 1, c - 1) -
                                D.atc(r - 1, c + 1) + D.atc(r - 1, c - 1));
    H(0, 2) = H(2, 0) = 0.25 * (Dp.atc(r + 1, c) - Dp.atc(r - 1, c) -
                                Dm.atc(r + 1, c) + Dm.atc(r - 1, c));
    H(1, 2) = H(2, 1) = 0.25 * (Dp.atc(r, c + 1) - Dp.atc(r, c - 1) -
                                Dm.atc(r, c + 1) + Dm.atc(r, c - 1));

    Eigen::FullPivLU<Eigen::Matrix3d> lu(H);
    if (!lu.isInvertible()) return false;
    delta = lu.solve(-g);

    if (std::abs(delta[0]) < 0.5 && std::abs(delta[1]) < 0.5 && std::abs(delta[2]) < 0.5) {
      out = {l, r, c, delta[2], delta[0], delta[1],
             v + 0.5 * g.dot(delta)};
      return true;
    }
    r += static_cast<int>(std::lround(delta[0]));
    c = wrap_col(c + static_cast<int>(std::lround(delta[1])), cols);
    l += static_cast<int>(std::lround(delta[2]));
    if (r < 1 || r > rows - 2 || l < 1 || l > s) return false;
  }
  return false;
}

bool edge_like(const Level& D, int r, int c, double edge_ratio) {
  const double v = D.at(r, c);
  const double dxx = D.atc(r, c + 1) + D.atc(r, c - 1) - 2.0 * v;
  const double dyy = D.atc(r + 1, c) + D.atc(r - 1, c) - 2.0 * v;
  const double dxy = 0.25 * (D.atc(r + 1, c + 1) - D.atc(r + 1, c - 1) -
                             D.atc(r - 1, c + 1) + D.atc(r - 1, c - 1));
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  if (det <= 0.0) return true;
  return tr * tr * edge_ratio >= (edge_ratio + 1.0) * (edge_ratio + 1.0) * det;
}

// Central-difference gradient with cyclic columns; caller keeps r in [1, rows-2].
inline void gradient(const Level& img, int r, int c, double& dx, double& dy) {
  dx = 0.5 * (img.atc(r, c + 1) - img.atc(r, c - 1));
  dy = 0.5 * (img.at(r + 1, wrap_col(c, img.cols)) - img.at(r - 1, wrap_col(c, img.cols)));
}

// 36-bin gradient-orientation histogram around (r, c); returns peak angles.
std::vector<double> orientation_peaks(const Level& img, int r, int c, double scl_octv,
                                      double peak_ratio) {
  constexpr int kBins = 36;
  double hist[kBins] = {};
  const double sigma = 1.5 * scl_octv;
  const int radius = static_cast<int>(std::lround(3.0 * sigma));
  const double wscale = -1.0 / (2.0 * sigma * sigma);

  for (int i = -radius; i <= radius; ++i) {
    const int rr = r + i;
    if (rr < 1 || rr > img.rows - 2) continue;
    for (int j = -radius; j <= radius; ++j) {
      double dx, dy;
      gradient(img, rr, c + j, dx, dy);
      const double mag = std::sqrt(dx * dx + dy * dy);
      const double theta = std::atan2(dy, dx);
      int b = static_cast<int>(std::lround((theta + M_PI) / kTwoPi * kBins));
      b = (b % kBins + kBins) % kBins;
      hist[b] += std::exp((i * i + j * j) * wscale) * mag;
    }
  }

  double smooth[kBins];
  for (int b = 0; b < kBins; ++b) {
    const auto h = [&](int k) { return hist[(k % kBins + kBins) % kBins]; };
    smooth[b] = (h(b - 2) + h(b + 2)) * (1.0 / 16.0) + (h(b - 1) + h(b + 1)) * (4.0 / 16.0) +
                h(b) * (6.0 / 16.0);
  }
  const double peak = *std::max_element(smooth, smooth + kBins);
  std::vector<double> out;
  if (peak <= 0.0) return out;
  for (int b = 0; b < kBins; ++b) {
    const double prev = smooth[(b + kBins - 1) % kBins];
    const double next = smooth[(b + 1) % kBins];
    if (smooth[b] > prev && smooth[b] > next && smooth[b] >= peak_ratio * peak) {
      const double interp = 0.5 * (prev - next) / (prev - 2.0 * smooth[b] + next);
      double theta = (b + interp) * (kTwoPi / kBins) - M_PI;
      if (theta < -M_PI) theta += kTwoPi;
      if (theta >= M_PI) theta -= kTwoPi;
      out.push_back(theta);
    }
  }
  return out;
}

// 4x4 spatial x 8 orientation gradient histogram with trilinear interpolation,
// L2-normalized with the usual 0.2 clamp. False when the window has no
// gradient energy (nothing to normalize).
bool build_descriptor(const Level& img, int r, int c, double scl_octv, double ori,
                      std::array<float, 128>& desc) {
  constexpr int d = 4, n = 8;
  const double hist_width = 3.0 * scl_octv;
  const double cos_t = std::cos(ori) / hist_width;
  const double sin_t = std::sin(ori) / hist_width;
  const double bins_per_rad = n / kTwoPi;
  const double exp_scale = -1.0 / (d * d * 0.5);
  int radius = static_cast<int>(std::lround(hist_width * M_SQRT2 * (d + 1) * 0.5));
  radius = std::min(radius, static_cast<int>(std::sqrt(static_cast<double>(img.rows) * img.rows +
                                                       static_cast<double>(img.cols) * img.cols)));

  double hist[d][d][n] = {};
  for (int i = -radius; i <= radius; ++i) {
    const int rr = r + i;
    if (rr < 1 || rr > img.rows - 2) continue;
    for (int j = -radius; j <= radius; ++j) {
      const double c_rot = j * cos_t - i * sin_t;
      const double r_rot = j * sin_t + i * cos_t;
      const double rbin = r_rot + d / 2 - 0.5;
      const double cbin = c_rot + d / 2 - 0.5;
      if (rbin <= -1.0 || rbin >= d || cbin <= -1.0 || cbin >= d) continue;

      double dx, dy;
      gradient(img, rr, c + j, dx, dy);
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag == 0.0) continue;
      double obin = (std::atan2(dy, dx) - ori) * bins_per_rad;
      const double w = std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);

      int r0 = static_cast<int>(std::floor(rbin));
      int c0 = static_cast<int>(std::floor(cbin));
      int o0 = static_cast<int>(std::floor(obin));
      const double fr = rbin - r0, fc = cbin - c0, fo = obin - o0;
      o0 = ((o0 % n) + n) % n;

      const double v = mag * w;
      for (int di = 0; di < 2; ++di) {
        const int rb = r0 + di;
        if (rb < 0 || rb >= d) continue;
        const double vr = v * (di ? fr : 1.0 - fr);
        for (int dj = 0; dj < 2; ++dj) {
          const int cb = c0 + dj;
          if (cb < 0 || cb >= d) continue;
          const double vc = vr * (dj ? fc : 1.0 - fc);
          for (int dk = 0; dk < 2; ++dk) {
            const int ob = (o0 + dk) % n;
            hist[rb][cb][ob] += vc * (dk ? fo : 1.0 - fo);
          }
        }
      }
    }
  }

  double flat[128];
  double nrm2 = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < n; ++k) {
        const double v = hist[i][j][k];
        flat[(i * d + j) * n + k] = v;
        nrm2 += v * v;
      }
  if (nrm2 < 1e-12) return false;

  const double thr = 0.2 * std::sqrt(nrm2);
  nrm2 = 0.0;
  for (double& v : flat) {
    v = std::min(v, thr);
    nrm2 += v * v;
  }
  const double inv = 1.0 / std::sqrt(nrm2);
  for (int i = 0; i < 128; ++i) desc[i] = static_cast<float>(flat[i] * inv);
  return true;
}

}  // namespace

std::vector<Keypoint> detect_and_describe(const EqualizedImage& image, const SiftParams& p) {
  if (image.H < 16 || image.W < 16)
    throw std::invalid_argument("detect_and_describe: image must be at least 16x16");

  const int s = p.scales_per_octave;
  const std::vector<Octave> pyr = build_pyramid(image, p);

  std::vector<Keypoint> keypoints;
  for (int o = 0; o < p.octaves; ++o) {
    const Octave& oct = pyr[o];
    const int rows = oct.dog[0].rows, cols = oct.dog[0].cols;
    if (rows < 8) continue;
    const double factor = static_cast<double>(1 << o);

    for (int l = 1; l <= s; ++l) {
      const Level& D = oct.dog[l];
      for (int r = 1; r <= rows - 2; ++r) {
        for (int c = 0; c < cols; ++c) {
          if (std::abs(D.at(r, c)) <= 0.5 * p.contrast_threshold) continue;
          if (!is_extremum(oct, l, r, c)) continue;

          Refined ref;
          if (!refine(oct, p, l, r, c, ref)) continue;
          if (std::abs(ref.contrast) < p.contrast_threshold) continue;
          if (edge_like(oct.dog[ref.l], ref.r, ref.c, p.edge_ratio)) continue;

          const double scl_octv = p.sigma0 * std::pow(2.0, (ref.l + ref.dl) / s);
          const Level& gimg = oct.gauss[ref.l];
          for (const double theta :
               orientation_peaks(gimg, ref.r, ref.c, scl_octv, p.peak_ratio)) {
            Keypoint kp;
            if (!build_descriptor(gimg, ref.r, ref.c, scl_octv, theta, kp.descriptor)) continue;
            kp.row = (ref.r + ref.dr) * factor;
            double col = (ref.c + ref.dc) * factor;
            col = std::fmod(col, static_cast<double>(image.W));
            if (col < 0.0) col += image.W;
            kp.col = col;
            kp.scale = scl_octv * factor;
            kp.orientation = theta;
            kp.response = static_cast<float>(std::abs(ref.contrast));
            keypoints.push_back(kp);
          }
        }
      }
    }
  }

  std::stable_sort(keypoints.begin(), keypoints.end(), [](const Keypoint& a, const Keypoint& b) {
    return std::tie(a.row, a.col, a.scale, a.orientation) <
           std::tie(b.row, b.col, b.scale, b.orientation);
  });
  return keypoints;
}

}  // namespace rilo
