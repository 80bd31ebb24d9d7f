#include "rilo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rilo/errors.hpp"
#include "rilo/rng.hpp"

namespace rilo {

namespace {

constexpr double kDegToRad = M_PI / 180.0;
constexpr double kNoHit = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * M_PI;

// Nearest positive ray parameter for o + t*d against the plane z = z0.
double hit_plane(const PlaneSpec& p, double time, const Eigen::Vector3d& o,
                 const Eigen::Vector3d& d) {
  const double z0 = p.z + p.velocity.z() * time;
  if (std::abs(d.z()) < 1e-15) return kNoHit;
  const double t = (z0 - o.z()) / d.z();
  return t > 1e-12 ? t : kNoHit;
}

double hit_box(const BoxSpec& b, double time, const Eigen::Vector3d& o,
               const Eigen::Vector3d& d) {
  const Eigen::Vector3d c = b.center + b.velocity * time;
  const double cy = std::cos(-b.yaw), sy = std::sin(-b.yaw);
  // Ray in the box frame (rotate by -yaw about the box center).
  const Eigen::Vector3d oc = o - c;
  const Eigen::Vector3d ol(cy * oc.x() - sy * oc.y(), sy * oc.x() + cy * oc.y(), oc.z());
  const Eigen::Vector3d dl(cy * d.x() - sy * d.y(), sy * d.x() + cy * d.y(), d.z());

  double tmin = -kNoHit, tmax = kNoHit;
  for (int axis = 0; axis < 3; ++axis) {
    const double half = b.size[axis] / 2.0;
    if (std::abs(dl[axis]) < 1e-15) {
      if (ol[axis] < -half || ol[axis] > half) return kNoHit;
      continue;
    }
    double t0 = (-half - ol[axis]) / dl[axis];
    double t1 = (half - ol[axis]) / dl[axis];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return kNoHit;
  }
  if (tmin > 1e-12) return tmin;   // sensor outside: entering face
  if (tmax > 1e-12) return tmax;   // sensor inside: interior wall
  return kNoHit;
}

double hit_cylinder(const CylinderSpec& cs, double time, const Eigen::Vector3d& o,
                    const Eigen::Vector3d& d) {
  const Eigen::Vector3d off = cs.velocity * time;
  const double cx = cs.center.x() + off.x(), cyc = cs.center.y() + off.y();
  const double zlo = cs.z_min + off.z(), zhi = cs.z_max + off.z();

  const double ox = o.x() - cx, oy = o.y() - cyc;
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a < 1e-15) return kNoHit;  // vertical ray never meets the lateral surface
  const double b = 2.0 * (ox * d.x() + oy * d.y());
  const double c = ox * ox + oy * oy - cs.radius * cs.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return kNoHit;
  const double sq = std::sqrt(disc);
  for (const double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (t <= 1e-12) continue;
    const double z = o.z() + t * d.z();
    if (z >= zlo && z <= zhi) return t;
  }
  return kNoHit;
}

double yaw_deg_key(const IniSection& s, const std::string& key, double fallback_deg) {
  return s.get_double(key, fallback_deg) * kDegToRad;
}

}  // namespace

SceneSpec SceneSpec::from_ini(const IniDoc& doc) {
  SceneSpec spec;
  if (const IniSection* s = doc.find("scanner")) {
    spec.scanner.rings = static_cast<int>(s->get_int("rings", spec.scanner.rings));
    spec.scanner.azimuth_steps =
        static_cast<int>(s->get_int("azimuth_steps", spec.scanner.azimuth_steps));
    spec.scanner.elev_max = s->get_double("elev_max_deg", spec.scanner.elev_max / kDegToRad) * kDegToRad;
    spec.scanner.elev_min = s->get_double("elev_min_deg", spec.scanner.elev_min / kDegToRad) * kDegToRad;
    spec.scanner.max_range = s->get_double("max_range", spec.scanner.max_range);
    spec.scanner.jitter = s->get_double("jitter", spec.scanner.jitter);
  }
  if (spec.scanner.rings < 1 || spec.scanner.azimuth_steps < 1)
    throw ConfigError("[scanner] rings and azimuth_steps must be >= 1");
  if (!(spec.scanner.elev_min < spec.scanner.elev_max))
    throw ConfigError("[scanner] elev_min_deg must be below elev_max_deg");
  if (!(spec.scanner.max_range > 0)) throw ConfigError("[scanner] max_range must be positive");
  spec.scanner.jitter = std::min(std::max(spec.scanner.jitter, 0.0), 0.49);

  for (const IniSection* s : doc.find_all("plane")) {
    PlaneSpec p;
    p.z = s->get_double("z");
    p.velocity = s->get_vec3("velocity", Eigen::Vector3d::Zero());
    p.intensity = static_cast<float>(s->get_double("intensity", p.intensity));
    spec.planes.push_back(p);
  }
  for (const IniSection* s : doc.find_all("box")) {
    BoxSpec b;
    b.center = s->get_vec3("center");
    b.size = s->get_vec3("size");
    if (b.size.minCoeff() <= 0) throw ConfigError("[box] size components must be positive");
    b.yaw = yaw_deg_key(*s, "yaw_deg", 0.0);
    b.velocity = s->get_vec3("velocity", Eigen::Vector3d::Zero());
    b.intensity = static_cast<float>(s->get_double("intensity", b.intensity));
    spec.boxes.push_back(b);
  }
  for (const IniSection* s : doc.find_all("cylinder")) {
    CylinderSpec c;
    c.center = s->get_vec2("center");
    c.radius = s->get_double("radius");
    if (c.radius <= 0) throw ConfigError("[cylinder] radius must be positive");
    c.z_min = s->get_double("z_min");
    c.z_max = s->get_double("z_max");
    if (!(c.z_min < c.z_max)) throw ConfigError("[cylinder] z_min must be below z_max");
    c.velocity = s->get_vec3("velocity", Eigen::Vector3d::Zero());
    c.intensity = static_cast<float>(s->get_double("intensity", c.intensity));
    spec.cylinders.push_back(c);
  }
  if (const IniSection* s = doc.find("motion")) {
    MotionSpec m;
    m.frames = static_cast<int>(s->get_int("frames", m.frames));
    if (m.frames < 1) throw ConfigError("[motion] frames must be >= 1");
    m.step = s->get_vec3("step", Eigen::Vector3d::Zero());
    if (s->has("forward")) m.step.x() = s->get_double("forward");
    m.yaw_step = yaw_deg_key(*s, "yaw_deg", 0.0);
    m.dt = s->get_double("dt", m.dt);
    spec.motion = m;
  }
  return spec;
}

SceneSpec SceneSpec::from_file(const std::filesystem::path& path) {
  return from_ini(load_ini(path));
}

PointCloud synth_scene(std::uint64_t seed, const SceneSpec& spec, const Pose& sensor_pose,
                       double time) {
  if (!spec.has_primitives()) throw ConfigError("scene spec has no primitives");
  const ScannerModel& sc = spec.scanner;
  const double dalpha = (sc.elev_max - sc.elev_min) / sc.rings;
  const double dbeta = 2.0 * M_PI / sc.azimuth_steps;

  // One angular offset pair per ray, drawn up-front so the pattern depends on
  // the seed alone (a moving sensor keeps the same ray set frame to frame).
  std::vector<double> joff;
  if (sc.jitter > 0.0) {
    auto rng = seeded_engine(seed, 0xa11);
    joff.resize(static_cast<std::size_t>(sc.rings) * sc.azimuth_steps * 2);
    for (double& v : joff) v = uniform_real(rng, -1.0, 1.0);
  }

  const Eigen::Matrix3d& R = sensor_pose.rotation;
  const Eigen::Vector3d& origin = sensor_pose.translation;

  // Azimuth culling for the bounded primitives: each box/cylinder is entered
  // into the horizontal-angle buckets its bounding sphere can cover as seen
  // from the sensor, and a ray only tests the primitives in its bucket.
  // Planes are unbounded and always tested. Bucket lists keep primitive-index
  // order, so hit selection (nearest, ties to the earlier primitive) matches
  // the plain scan over all primitives.
  constexpr int kBuckets = 512;
  const double bucket_width = kTwoPi / kBuckets;
  std::vector<std::vector<int>> box_bucket(kBuckets), cyl_bucket(kBuckets);
  const auto mark = [&](std::vector<std::vector<int>>& buckets, int idx,
                        const Eigen::Vector3d& center, double radius) {
    const double dx = center.x() - origin.x(), dy = center.y() - origin.y();
    const double dxy = std::hypot(dx, dy);
    if (dxy <= radius) {
      for (auto& b : buckets) b.push_back(idx);
      return;
    }
    const double half = std::asin(std::min(1.0, radius / dxy)) + 2.0 * bucket_width;
    double lo = std::atan2(dy, dx) - half;
    double hi = std::atan2(dy, dx) + half;
    if (hi - lo >= kTwoPi) {
      for (auto& b : buckets) b.push_back(idx);
      return;
    }
    const double shift = std::floor((lo + M_PI) / kTwoPi) * kTwoPi;
    lo -= shift;
    hi -= shift;
    const int b0 = std::clamp(static_cast<int>((lo + M_PI) / bucket_width), 0, kBuckets - 1);
    const int b1 = static_cast<int>((hi + M_PI) / bucket_width);
    for (int b = b0; b <= b1; ++b) buckets[b % kBuckets].push_back(idx);
  };
  for (std::size_t i = 0; i < spec.boxes.size(); ++i) {
    const BoxSpec& b = spec.boxes[i];
    mark(box_bucket, static_cast<int>(i), b.center + b.velocity * time, b.size.norm() / 2.0);
  }
  for (std::size_t i = 0; i < spec.cylinders.size(); ++i) {
    const CylinderSpec& c = spec.cylinders[i];
    const Eigen::Vector3d off = c.velocity * time;
    const Eigen::Vector3d center(c.center.x() + off.x(), c.center.y() + off.y(),
                                 0.5 * (c.z_min + c.z_max) + off.z());
    const double radius = std::hypot(c.radius, 0.5 * (c.z_max - c.z_min));
    mark(cyl_bucket, static_cast<int>(i), center, radius);
  }

  PointCloud cloud;
  cloud.reserve(static_cast<std::size_t>(sc.rings) * sc.azimuth_steps);
  for (int ring = 0; ring < sc.rings; ++ring) {
    for (int az = 0; az < sc.azimuth_steps; ++az) {
      const std::size_t ray = static_cast<std::size_t>(ring) * sc.azimuth_steps + az;
      const double ja = joff.empty() ? 0.0 : joff[2 * ray] * sc.jitter;
      const double jb = joff.empty() ? 0.0 : joff[2 * ray + 1] * sc.jitter;
      const double alpha = sc.elev_max - (ring + 0.5 + ja) * dalpha;
      const double beta = -M_PI + (az + 0.5 + jb) * dbeta;
      const double ca = std::cos(alpha);
      const Eigen::Vector3d dir_s(ca * std::cos(beta), ca * std::sin(beta), std::sin(alpha));
      const Eigen::Vector3d dir_w = R * dir_s;

      double best = kNoHit;
      float best_int = 0.0f;
      for (const auto& p : spec.planes)
        if (const double t = hit_plane(p, time, origin, dir_w); t < best) {
          best = t;
          best_int = p.intensity;
        }
      const double beta_w = std::atan2(dir_w.y(), dir_w.x());
      const int bucket = std::clamp(static_cast<int>((beta_w + M_PI) / bucket_width), 0,
                                    kBuckets - 1);
      for (const int i : box_bucket[bucket])
        if (const double t = hit_box(spec.boxes[i], time, origin, dir_w); t < best) {
          best = t;
          best_int = spec.boxes[i].intensity;
        }
      for (const int i : cyl_bucket[bucket])
        if (const double t = hit_cylinder(spec.cylinders[i], time, origin, dir_w); t < best) {
          best = t;
          best_int = spec.cylinders[i].intensity;
        }
      if (best <= sc.max_range)
        cloud.push_back(best * dir_s.x(), best * dir_s.y(), best * dir_s.z(), best_int);
    }
  }
  return cloud;
}

double surface_distance(const SceneSpec& spec, const Eigen::Vector3d& p, double time) {
  double best = kNoHit;
  for (const auto& pl : spec.planes)
    best = std::min(best, std::abs(p.z() - (pl.z + pl.velocity.z() * time)));
  for (const auto& b : spec.boxes) {
    const Eigen::Vector3d c = b.center + b.velocity * time;
    const double cy = std::cos(-b.yaw), sy = std::sin(-b.yaw);
    const Eigen::Vector3d pc = p - c;
    const Eigen::Vector3d pl(cy * pc.x() - sy * pc.y(), sy * pc.x() + cy * pc.y(), pc.z());
    const Eigen::Vector3d half = b.size / 2.0;
    const Eigen::Vector3d q = pl.cwiseAbs() - half;
    const double outside = q.cwiseMax(0.0).norm();
    const double inside = std::min(q.maxCoeff(), 0.0);  // negative depth inside
    best = std::min(best, std::abs(outside + inside));
  }
  for (const auto& cs : spec.cylinders) {
    const Eigen::Vector3d off = cs.velocity * time;
    const double dr =
        std::hypot(p.x() - (cs.center.x() + off.x()), p.y() - (cs.center.y() + off.y())) -
        cs.radius;
    const double dz = std::max({cs.z_min + off.z() - p.z(), p.z() - (cs.z_max + off.z()), 0.0});
    best = std::min(best, std::hypot(dr, dz));
  }
  return best;
}

Pose motion_pose(const MotionSpec& motion, int frame) {
  const Pose step = make_yaw(motion.yaw_step, motion.step);
  Pose abs = Pose::identity();
  for (int k = 0; k < frame; ++k) abs = compose(abs, step);
  return abs;
}

}  // namespace rilo
