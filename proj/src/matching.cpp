#include "rilo/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rilo/errors.hpp"
#include "rilo/kernels.hpp"

namespace rilo {

namespace {

// Cyclic column distance between two keypoints.
int col_gap(double ca, double cb, int width) {
  double d = std::abs(ca - cb);
  return static_cast<int>(std::min(d, width - d));
}

struct Best {
  int idx = -1;
  float d1 = std::numeric_limits<float>::infinity();  // squared distances
  float d2 = std::numeric_limits<float>::infinity();
  int candidates = 0;
};

// Nearest and second-nearest neighbor in `to` for each keypoint of `from`.
std::vector<Best> nearest(const std::vector<Keypoint>& from, const std::vector<Keypoint>& to,
                          const MatchParams& p) {
  std::vector<float> flat(to.size() * 128);
  for (std::size_t j = 0; j < to.size(); ++j)
    std::copy(to[j].descriptor.begin(), to[j].descriptor.end(), flat.begin() + 128 * j);

  const auto& K = kernels::active();
  std::vector<float> dist(to.size());
  std::vector<Best> out(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    K.l2sq128_batch(from[i].descriptor.data(), flat.data(), to.size(), dist.data());
    Best b;
    for (std::size_t j = 0; j < to.size(); ++j) {
      if (p.max_col_displacement >= 0 &&
          col_gap(from[i].col, to[j].col, p.image_width) > p.max_col_displacement)
        continue;
      ++b.candidates;
      if (dist[j] < b.d1) {
        b.d2 = b.d1;
        b.d1 = dist[j];
        b.idx = static_cast<int>(j);
      } else if (dist[j] < b.d2) {
        b.d2 = dist[j];
      }
    }
    out[i] = b;
  }
  return out;
}

}  // namespace

std::vector<Match> match_descriptors(const std::vector<Keypoint>& a,
                                     const std::vector<Keypoint>& b, const MatchParams& params) {
  std::vector<Match> matches;
  if (a.empty() || b.empty()) return matches;
  if (params.max_col_displacement >= 0 && params.image_width <= 0)
    throw std::invalid_argument("match_descriptors: column gate needs image_width");

  const std::vector<Best> fwd = nearest(a, b, params);
  std::vector<Best> bwd;
  if (params.mutual) bwd = nearest(b, a, params);

  const float r2 = static_cast<float>(params.ratio * params.ratio);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Best& f = fwd[i];
    if (f.idx < 0) continue;
    // Ratio test in the squared domain; vacuous when only one candidate.
    if (f.candidates >= 2 && !(f.d1 < r2 * f.d2)) continue;
    if (params.mutual && bwd[f.idx].idx != static_cast<int>(i)) continue;
    matches.push_back({static_cast<int>(i), f.idx, std::sqrt(static_cast<double>(f.d1))});
  }

  std::sort(matches.begin(), matches.end(), [](const Match& x, const Match& y) {
    return std::tie(x.distance, x.index_a, x.index_b) < std::tie(y.distance, y.index_a, y.index_b);
  });
  return matches;
}

namespace {

// Rounded integer pixel of a sub-pixel keypoint; columns wrap, rows clamp.
void keypoint_pixel(const Keypoint& kp, int H, int W, int& row, int& col) {
  row = std::min(std::max(static_cast<int>(std::lround(kp.row)), 0), H - 1);
  col = static_cast<int>(std::lround(kp.col)) % W;
  if (col < 0) col += W;
}

// Gaussian-weighted zero-normalized cross correlation between the depth
// patches at (ra, ca) in `ia` and (rb, cb) in `ib`, computed on depth passed
// through tanh((d - depth_ref) / sigma). The saturation keeps the position
// of silhouette steps (the localizing signal) while flattening background
// content, which moves with parallax between frames and would otherwise drag
// the alignment off the object. Columns wrap; the caller guarantees the rows
// fit. Returns -2 when either patch is flat.
double patch_zncc(const SphericalImage& ia, int ra, int ca, const SphericalImage& ib, int rb,
                  int cb, int w, const std::vector<double>& spatial, double depth_ref) {
  const double sigma_d = 1.0;  // meters; beyond ~2 m saturates as background
  const int side = 2 * w + 1;
  const std::size_t n = static_cast<std::size_t>(side) * side;
  std::vector<double> va(n), vb(n);
  double wsum = 0.0, mean_a = 0.0, mean_b = 0.0;
  std::size_t t = 0;
  for (int dr = -w; dr <= w; ++dr) {
    for (int dc = -w; dc <= w; ++dc, ++t) {
      const int ca2 = ((ca + dc) % ia.W + ia.W) % ia.W;
      const int cb2 = ((cb + dc) % ib.W + ib.W) % ib.W;
      va[t] = std::tanh((ia.depth_at(ra + dr, ca2) - depth_ref) / sigma_d);
      vb[t] = std::tanh((ib.depth_at(rb + dr, cb2) - depth_ref) / sigma_d);
      wsum += spatial[t];
      mean_a += spatial[t] * va[t];
      mean_b += spatial[t] * vb[t];
    }
  }
  mean_a /= wsum;
  mean_b /= wsum;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (t = 0; t < n; ++t) {
    const double xa = va[t] - mean_a;
    const double xb = vb[t] - mean_b;
    cov += spatial[t] * xa * xb;
    var_a += spatial[t] * xa * xa;
    var_b += spatial[t] * xb * xb;
  }
  const double norm = std::sqrt(var_a * var_b);
  if (!(norm > 0.0)) return -2.0;
  return cov / norm;
}

// Snaps the frame-b pixel toward the offset whose completed-depth patch best
// correlates with the frame-a patch. Only offsets whose center pixel carries
// real (pre-completion) depth are considered, so the later back-projection
// still lands on a stored point. Keeps the original pixel when the patch
// would leave the image vertically or every candidate is flat.
void refine_pixel(const SphericalImage& ia, int ra, int ca, const SphericalImage& ib, int& rb,
                  int& cb, const MatchParams& p) {
  const int w = p.refine_window;
  if (w < 1 || ra - w < 0 || ra + w >= ia.H) return;

  const int side = 2 * w + 1;
  std::vector<double> weight(static_cast<std::size_t>(side) * side);
  const double sigma = std::max(1.0, w / 1.5);
  std::size_t t = 0;
  for (int dr = -w; dr <= w; ++dr)
    for (int dc = -w; dc <= w; ++dc, ++t)
      weight[t] = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));

  const double depth_ref = ia.depth_at(ra, ca);
  double best = -3.0;
  int best_dr = 0, best_dc = 0;
  for (int dr = -p.refine_rows; dr <= p.refine_rows; ++dr) {
    const int r = rb + dr;
    if (r - w < 0 || r + w >= ib.H) continue;
    for (int dc = -p.refine_cols; dc <= p.refine_cols; ++dc) {
      const int c = ((cb + dc) % ib.W + ib.W) % ib.W;
      if (!ib.valid_at(r, c)) continue;
      const double score = patch_zncc(ia, ra, ca, ib, r, c, w, weight, depth_ref);
      if (score > best) {
        best = score;
        best_dr = dr;
        best_dc = dc;
      }
    }
  }
  if (best > -2.0) {
    rb += best_dr;
    cb = ((cb + best_dc) % ib.W + ib.W) % ib.W;
  }
}

}  // namespace

MKPSet extract_mkps(const FrameInputs& a, const FrameInputs& b, int n, const SiftParams& detector,
                    const MatchParams& matcher, int* shortfall) {
  if (n < 1) throw std::invalid_argument("extract_mkps: n must be >= 1");

  const std::vector<Keypoint> ka = detect_and_describe(*a.equalized, detector);
  const std::vector<Keypoint> kb = detect_and_describe(*b.equalized, detector);
  if (ka.empty() || kb.empty())
    throw DegenerateFramePair("extract_mkps: no keypoints detected (" +
                              std::to_string(ka.size()) + " vs " + std::to_string(kb.size()) +
                              ")");
  const std::vector<Match> matches = match_descriptors(ka, kb, matcher);

  std::vector<std::array<double, 6>> rows;
  rows.reserve(std::min<std::size_t>(matches.size(), n));
  for (const Match& m : matches) {
    if (static_cast<int>(rows.size()) >= n) break;
    int ra, ca, rb, cb;
    keypoint_pixel(ka[m.index_a], a.image->H, a.image->W, ra, ca);
    keypoint_pixel(kb[m.index_b], b.image->H, b.image->W, rb, cb);
    if (matcher.refine) refine_pixel(*a.image, ra, ca, *b.image, rb, cb, matcher);
    // The validity mask predates completion, so this rejects keypoints that
    // only exist because completion invented depth there.
    const auto pa = back_project(*a.image, ra, ca, *a.cloud);
    if (!pa) continue;
    const auto pb = back_project(*b.image, rb, cb, *b.cloud);
    if (!pb) continue;
    rows.push_back({pa->x(), pa->y(), pa->z(), pb->x(), pb->y(), pb->z()});
  }
  if (rows.empty())
    throw DegenerateFramePair("extract_mkps: no matches survive the validity filter (" +
                              std::to_string(matches.size()) + " raw matches)");

  if (shortfall) *shortfall = n - static_cast<int>(rows.size());
  MKPSet set;
  set.pairs.resize(static_cast<Eigen::Index>(rows.size()), 6);
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (int c = 0; c < 6; ++c) set.pairs(static_cast<Eigen::Index>(k), c) = rows[k][c];
  return set;
}

}  // namespace rilo
