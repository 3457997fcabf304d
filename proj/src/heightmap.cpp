#include "glassdepth/heightmap.hpp"

#include <cmath>

namespace glassdepth {

std::vector<Eigen::Vector3d> backproject_cloud(
    const DepthImage& depth, const CameraIntrinsics& intr,
    const RigidTransform& cam_to_world) {
  require_shape(depth.width, depth.height, intr.width, intr.height,
                "backproject_cloud");
  cam_to_world.validate();
  std::vector<Eigen::Vector3d> cloud;
  cloud.reserve(depth.valid_count());
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x)
      if (depth.valid(x, y))
        cloud.push_back(
            cam_to_world.apply(backproject(x, y, depth.at(x, y), intr)));
  return cloud;
}

Heightmap build_heightmap(const std::vector<Eigen::Vector3d>& cloud,
                          const Workspace& ws) {
  ws.validate();
  Heightmap hm(ws.cells_x(), ws.cells_y());
  for (const auto& p : cloud) {
    if ((p - ws.min_corner).minCoeff() < 0.0 ||
        (ws.max_corner - p).minCoeff() <= 0.0)
      continue;
    const int ix = static_cast<int>((p.x() - ws.min_corner.x()) / ws.resolution);
    const int iy = static_cast<int>((p.y() - ws.min_corner.y()) / ws.resolution);
    if (!hm.height.in_bounds(ix, iy)) continue;
    if (!hm.valid.at(ix, iy) || p.z() > hm.height.at(ix, iy)) {
      hm.height.at(ix, iy) = p.z();
      hm.valid.at(ix, iy) = 1;
    }
  }
  return hm;
}

namespace {

// Exact grid rotation for angles that map cells onto cells: 180 degrees on
// any grid, 90/270 on square grids.
bool exact_rotation(const Heightmap& src, int quarter_turns, Heightmap* out) {
  const int w = src.width(), h = src.rows();
  quarter_turns = ((quarter_turns % 4) + 4) % 4;
  if (quarter_turns == 0) {
    *out = src;
    return true;
  }
  if (quarter_turns == 2) {
    *out = Heightmap(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        out->height.at(x, y) = src.height.at(w - 1 - x, h - 1 - y);
        out->valid.at(x, y) = src.valid.at(w - 1 - x, h - 1 - y);
      }
    return true;
  }
  if (w != h) return false;
  *out = Heightmap(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      // Inverse map of a CCW quarter turn about the center.
      int sx = quarter_turns == 1 ? y : w - 1 - y;
      int sy = quarter_turns == 1 ? h - 1 - x : x;
      out->height.at(x, y) = src.height.at(sx, sy);
      out->valid.at(x, y) = src.valid.at(sx, sy);
    }
  return true;
}

Heightmap bilinear_rotation(const Heightmap& src, double angle_rad) {
  const int w = src.width(), h = src.rows();
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double c = std::cos(angle_rad), s = std::sin(angle_rad);
  Heightmap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Inverse rotation of the target cell center.
      const double dx = x - cx, dy = y - cy;
      double sx = cx + c * dx + s * dy;
      double sy = cy - s * dx + c * dy;
      if (std::abs(sx - std::round(sx)) < 1e-9) sx = std::round(sx);
      if (std::abs(sy - std::round(sy)) < 1e-9) sy = std::round(sy);
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0, fy = sy - y0;
      const double weights[4] = {(1 - fx) * (1 - fy), fx * (1 - fy),
                                 (1 - fx) * fy, fx * fy};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      double value = 0.0;
      bool ok = true;
      for (int k = 0; k < 4 && ok; ++k) {
        if (weights[k] == 0.0) continue;
        if (!src.height.in_bounds(xs[k], ys[k]) || !src.valid.at(xs[k], ys[k]))
          ok = false;
        else
          value += weights[k] * src.height.at(xs[k], ys[k]);
      }
      if (ok) {
        out.height.at(x, y) = value;
        out.valid.at(x, y) = 1;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Heightmap> rotation_stack(const Heightmap& h, int n) {
  if (n < 1) throw ConfigError("rotation_stack: n must be >= 1");
  std::vector<Heightmap> stack;
  stack.reserve(n);
  stack.push_back(h);
  for (int k = 1; k < n; ++k) {
    Heightmap rotated;
    if ((k * 360) % (n * 90) == 0 &&
        exact_rotation(h, k * 4 / n, &rotated)) {
      stack.push_back(std::move(rotated));
    } else {
      const double angle = 2.0 * M_PI * k / n;
      stack.push_back(bilinear_rotation(h, angle));
    }
  }
  return stack;
}

}  // namespace glassdepth
