#include "glassdepth/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glassdepth/rng.hpp"

namespace glassdepth {

namespace {

constexpr double kTMin = 1e-9;

// Substream tags so every random decision draws from its own hash stream.
enum : uint64_t {
  kStreamNoise = 1,
  kStreamHoles = 2,
  kStreamNormals = 3,
  kStreamBoundary = 4,
  kStreamMaskFn = 5,
  kStreamMaskFp = 6,
};

std::optional<RayHit> hit_plane(const Primitive& p, const Eigen::Vector3d& o,
                                const Eigen::Vector3d& d) {
  double denom = p.normal.dot(d);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  double t = p.normal.dot(p.point - o) / denom;
  if (t <= kTMin) return std::nullopt;
  return RayHit{t, p.normal};
}

std::optional<RayHit> hit_sphere(const Primitive& p, const Eigen::Vector3d& o,
                                 const Eigen::Vector3d& d) {
  Eigen::Vector3d oc = o - p.center;
  double a = d.squaredNorm();
  double b = 2.0 * oc.dot(d);
  double c = oc.squaredNorm() - p.radius * p.radius;
  double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  double s = std::sqrt(disc);
  double t = (-b - s) / (2.0 * a);
  if (t <= kTMin) t = (-b + s) / (2.0 * a);
  if (t <= kTMin) return std::nullopt;
  Eigen::Vector3d n = (o + t * d - p.center) / p.radius;
  return RayHit{t, n};
}

std::optional<RayHit> hit_box(const Primitive& p, const Eigen::Vector3d& o,
                              const Eigen::Vector3d& d) {
  // Slab test in the box frame.
  Eigen::Matrix3d R = p.rotation.toRotationMatrix();
  Eigen::Vector3d ol = R.transpose() * (o - p.center);
  Eigen::Vector3d dl = R.transpose() * d;
  double tnear = -std::numeric_limits<double>::infinity();
  double tfar = std::numeric_limits<double>::infinity();
  int near_axis = -1;
  for (int i = 0; i < 3; ++i) {
    double h = p.half_extents[i];
    if (std::abs(dl[i]) < 1e-15) {
      if (std::abs(ol[i]) > h) return std::nullopt;
      continue;
    }
    double t1 = (-h - ol[i]) / dl[i];
    double t2 = (h - ol[i]) / dl[i];
    if (t1 > t2) std::swap(t1, t2);
    if (t1 > tnear) {
      tnear = t1;
      near_axis = i;
    }
    tfar = std::min(tfar, t2);
    if (tnear > tfar) return std::nullopt;
  }
  if (tnear <= kTMin || near_axis < 0) return std::nullopt;  // inside or behind
  Eigen::Vector3d nl = Eigen::Vector3d::Zero();
  nl[near_axis] = dl[near_axis] > 0.0 ? -1.0 : 1.0;  // entry face
  return RayHit{tnear, R * nl};
}

std::optional<RayHit> hit_cylinder(const Primitive& p, const Eigen::Vector3d& o,
                                   const Eigen::Vector3d& d) {
  const Eigen::Vector3d& a = p.axis;
  Eigen::Vector3d oc = o - p.base;
  std::optional<RayHit> best;
  auto consider = [&](double t, const Eigen::Vector3d& n) {
    if (t > kTMin && (!best || t < best->t)) best = RayHit{t, n};
  };

  // Lateral surface: components perpendicular to the axis.
  Eigen::Vector3d op = oc - oc.dot(a) * a;
  Eigen::Vector3d dp = d - d.dot(a) * a;
  double qa = dp.squaredNorm();
  if (qa > 1e-15) {
    double qb = 2.0 * op.dot(dp);
    double qc = op.squaredNorm() - p.radius * p.radius;
    double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      double s = std::sqrt(disc);
      for (double t : {(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)}) {
        double axial = (oc + t * d).dot(a);
        if (axial >= 0.0 && axial <= p.height) {
          Eigen::Vector3d hit = o + t * d;
          consider(t, (hit - p.base - axial * a) / p.radius);
        }
      }
    }
  }

  // End caps.
  double da = d.dot(a);
  if (std::abs(da) > 1e-15) {
    for (int cap = 0; cap < 2; ++cap) {
      double plane_off = cap == 0 ? 0.0 : p.height;
      double t = (plane_off - oc.dot(a)) / da;
      Eigen::Vector3d hit = o + t * d;
      Eigen::Vector3d radial = hit - p.base - plane_off * a;
      if (radial.squaredNorm() <= p.radius * p.radius)
        consider(t, cap == 0 ? Eigen::Vector3d(-a) : a);
    }
  }
  return best;
}

struct PixelHit {
  double t;
  Eigen::Vector3d normal;
  int index;
};

// First hit over an explicit primitive list (smallest t; ties keep the
// earlier list entry).
std::optional<PixelHit> first_hit(const std::vector<Primitive>& prims,
                                  const Eigen::Vector3d& o,
                                  const Eigen::Vector3d& d, double z_max) {
  std::optional<PixelHit> best;
  for (size_t i = 0; i < prims.size(); ++i) {
    auto h = intersect(prims[i], o, d);
    if (h && (!best || h->t < best->t))
      best = PixelHit{h->t, h->normal, static_cast<int>(i)};
  }
  if (best && best->t > z_max) return std::nullopt;
  return best;
}

double pair_threshold(double di, double dj, double occ_threshold,
                      double rel_threshold) {
  return std::max(occ_threshold, rel_threshold * std::min(di, dj));
}

}  // namespace

std::optional<RayHit> intersect(const Primitive& prim,
                                const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& dir) {
  switch (prim.kind) {
    case Primitive::Kind::kPlane: return hit_plane(prim, origin, dir);
    case Primitive::Kind::kSphere: return hit_sphere(prim, origin, dir);
    case Primitive::Kind::kBox: return hit_box(prim, origin, dir);
    case Primitive::Kind::kCylinder: return hit_cylinder(prim, origin, dir);
  }
  return std::nullopt;
}

Scene render_scene(const SceneSpec& spec) {
  spec.validate();
  const CameraIntrinsics& intr = spec.intrinsics;
  Scene scene;
  scene.intrinsics = intr;
  scene.seed = spec.seed;
  scene.spec = spec;
  scene.gt_depth = DepthImage(intr.width, intr.height);
  scene.gt_normals = NormalMap(intr.width, intr.height);
  scene.gt_mask = TransparencyMask(intr.width, intr.height);

  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      Eigen::Vector3d d = intr.ray(x, y);  // d.z = 1, so t is z-depth
      auto hit = first_hit(spec.primitives, origin, d, spec.z_max);
      if (!hit) continue;
      Eigen::Vector3d n = hit->normal.normalized();
      if (n.dot(d) > 0.0) n = -n;
      scene.gt_depth.at(x, y) = hit->t;
      scene.gt_normals.at(x, y) = n;
      scene.gt_mask.at(x, y) = spec.primitives[hit->index].transparent ? 1 : 0;
    }
  }
  scene.gt_boundary = derive_boundaries(scene.gt_depth, scene.gt_mask);
  return scene;
}

BoundaryMap derive_boundaries(const DepthImage& gt_depth,
                              const TransparencyMask& gt_mask,
                              double occ_threshold, double rel_threshold) {
  require_shape(gt_depth.width, gt_depth.height, gt_mask.width, gt_mask.height,
                "derive_boundaries");
  const int w = gt_depth.width, h = gt_depth.height;
  BoundaryMap out(w, h);
  const int dx[4] = {1, -1, 0, 0};
  const int dy[4] = {0, 0, 1, -1};

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!gt_depth.valid(x, y)) continue;
      double di = gt_depth.at(x, y);

      bool occlusion = false;
      for (int k = 0; k < 4 && !occlusion; ++k) {
        int nx = x + dx[k], ny = y + dy[k];
        if (!gt_depth.in_bounds(nx, ny)) continue;
        if (!gt_depth.valid(nx, ny)) {
          occlusion = true;  // invalid neighbor counts as infinitely far
          continue;
        }
        double dj = gt_depth.at(nx, ny);
        if (di < dj &&
            dj - di > pair_threshold(di, dj, occ_threshold, rel_threshold))
          occlusion = true;
      }
      if (occlusion) {
        out.labels.at(x, y) = kOcclusion;
        out.occlusion_prob.at(x, y) = 1.0;
        continue;
      }

      if (!gt_mask.is_transparent(x, y)) continue;
      bool border = false, continuous = false;
      for (int k = 0; k < 4; ++k) {
        int nx = x + dx[k], ny = y + dy[k];
        if (!gt_mask.in_bounds(nx, ny) || gt_mask.is_transparent(nx, ny))
          continue;
        border = true;
        if (!gt_depth.valid(nx, ny)) continue;
        double dj = gt_depth.at(nx, ny);
        if (std::abs(di - dj) <=
            pair_threshold(di, dj, occ_threshold, rel_threshold))
          continuous = true;
      }
      if (border && continuous) out.labels.at(x, y) = kContact;
    }
  }
  return out;
}

DepthImage corrupt_depth(const Scene& scene, const CorruptionModel& model) {
  model.validate();
  const DepthImage& gt = scene.gt_depth;
  const TransparencyMask& mask = scene.gt_mask;
  require_shape(gt.width, gt.height, mask.width, mask.height, "corrupt_depth");
  DepthImage raw = gt;
  const double z_max = scene.spec ? scene.spec->z_max : 10.0;

  if (model.type2_passthrough) {
    if (!scene.spec)
      throw ConfigError("corrupt_depth: type 2 passthrough needs the scene spec");
    std::vector<Primitive> opaque;
    for (const auto& p : scene.spec->primitives)
      if (!p.transparent) opaque.push_back(p);
    const Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    for (int y = 0; y < gt.height; ++y) {
      for (int x = 0; x < gt.width; ++x) {
        if (!mask.is_transparent(x, y)) continue;
        auto hit = first_hit(opaque, origin, scene.intrinsics.ray(x, y), z_max);
        raw.at(x, y) = hit ? hit->t : DepthImage::kInvalid;
      }
    }
  }

  if (model.depth_noise_sigma > 0.0) {
    for (size_t i = 0; i < raw.size(); ++i) {
      if (mask[i] || !raw.valid_at(i)) continue;
      Rng rng(hash_combine(model.seed, kStreamNoise, i));
      double d = raw[i] + model.depth_noise_sigma * rng.normal();
      raw[i] = d <= 0.0 ? DepthImage::kInvalid : std::min(d, z_max);
    }
  }

  if (model.type1_hole_rate > 0.0) {
    std::vector<int> mask_pixels;
    for (size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) mask_pixels.push_back(static_cast<int>(i));
    int target = static_cast<int>(
        std::llround(model.type1_hole_rate * mask_pixels.size()));
    std::vector<int> alive;  // mask pixels not yet punched out
    for (int i : mask_pixels)
      if (raw.valid_at(i)) alive.push_back(i);
    target = std::min<int>(target, static_cast<int>(alive.size()));

    Rng rng(hash_combine(model.seed, kStreamHoles));
    const double r2 = model.type1_blob_radius * model.type1_blob_radius;
    int punched = 0;
    while (punched < target) {
      int center = alive[rng.uniform_int(0, static_cast<int>(alive.size()) - 1)];
      int cx = center % raw.width, cy = center / raw.width;
      // (squared distance, index) pairs inside the disk, nearest first, so a
      // truncated final blob stays contiguous around its center.
      std::vector<std::pair<double, int>> blob;
      for (size_t k = 0; k < alive.size(); ++k) {
        int px = alive[k] % raw.width, py = alive[k] / raw.width;
        double d2 = double(px - cx) * (px - cx) + double(py - cy) * (py - cy);
        if (d2 <= r2) blob.emplace_back(d2, alive[k]);
      }
      std::sort(blob.begin(), blob.end());
      if (static_cast<int>(blob.size()) > target - punched)
        blob.resize(target - punched);
      for (auto& [d2, idx] : blob) raw[idx] = DepthImage::kInvalid;
      punched += static_cast<int>(blob.size());
      std::erase_if(alive, [&](int i) { return !raw.valid_at(i); });
    }
  }

  return raw;
}

Scene perturb_inputs(const Scene& scene, const PerturbationModel& model) {
  model.validate();
  if (scene.gt_normals.width == 0 || scene.gt_mask.width == 0 ||
      scene.gt_boundary.width() == 0)
    throw ConfigError("perturb_inputs: ground-truth fields missing");

  Scene out = scene;
  out.input_normals = scene.gt_normals;
  out.input_mask = scene.gt_mask;
  out.input_boundary = scene.gt_boundary;

  if (model.normal_angle_sigma > 0.0) {
    const double sigma_rad = model.normal_angle_sigma * M_PI / 180.0;
    for (size_t i = 0; i < out.input_normals.size(); ++i) {
      Eigen::Vector3d n = scene.gt_normals[i];
      if (n.squaredNorm() == 0.0) continue;
      Rng rng(hash_combine(model.seed, kStreamNormals, i));
      double theta = std::abs(sigma_rad * rng.normal());
      double phi = rng.uniform(0.0, 2.0 * M_PI);
      // Axis perpendicular to n, so the resulting deviation is exactly theta.
      Eigen::Vector3d ref = std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX()
                                                  : Eigen::Vector3d::UnitY();
      Eigen::Vector3d u = n.cross(ref).normalized();
      Eigen::Vector3d v = n.cross(u);
      Eigen::Vector3d axis = std::cos(phi) * u + std::sin(phi) * v;
      Eigen::Vector3d rotated =
          std::cos(theta) * n + std::sin(theta) * axis.cross(n);
      if (n.z() < 0.0 && rotated.z() > 0.0) rotated.z() = -rotated.z();
      out.input_normals[i] = rotated.normalized();
    }
  }

  if (model.boundary_dropout > 0.0) {
    for (size_t i = 0; i < out.input_boundary.labels.size(); ++i) {
      if (out.input_boundary.labels[i] == kNonEdge) continue;
      Rng rng(hash_combine(model.seed, kStreamBoundary, i));
      if (rng.uniform() < model.boundary_dropout)
        out.input_boundary.labels[i] = kNonEdge;
    }
  }
  for (int round = 0; round < model.boundary_dilation; ++round) {
    const Raster<uint8_t> prev = out.input_boundary.labels;
    const int w = prev.width, h = prev.height;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (prev.at(x, y) != kNonEdge) continue;
        uint8_t grown = kNonEdge;
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          int nx = x + dx[k], ny = y + dy[k];
          if (!prev.in_bounds(nx, ny)) continue;
          uint8_t l = prev.at(nx, ny);
          if (l == kOcclusion) grown = kOcclusion;  // occlusion wins
          else if (l == kContact && grown == kNonEdge) grown = kContact;
        }
        out.input_boundary.labels.at(x, y) = grown;
      }
    }
  }
  for (size_t i = 0; i < out.input_boundary.labels.size(); ++i)
    out.input_boundary.occlusion_prob[i] =
        out.input_boundary.labels[i] == kOcclusion ? 1.0 : 0.0;

  if (model.mask_fn_rate > 0.0 || model.mask_fp_rate > 0.0) {
    for (size_t i = 0; i < out.input_mask.size(); ++i) {
      if (scene.gt_mask[i]) {
        Rng rng(hash_combine(model.seed, kStreamMaskFn, i));
        if (model.mask_fn_rate > 0.0 && rng.uniform() < model.mask_fn_rate)
          out.input_mask[i] = 0;
      } else {
        Rng rng(hash_combine(model.seed, kStreamMaskFp, i));
        if (model.mask_fp_rate > 0.0 && rng.uniform() < model.mask_fp_rate)
          out.input_mask[i] = 1;
      }
    }
  }

  return out;
}

}  // namespace glassdepth
