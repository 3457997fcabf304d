#pragma once

#include <Eigen/Core>
#include <stdexcept>

#include "glassdepth/errors.hpp"

namespace glassdepth {

// Pinhole camera. Frame convention: x right, y down, z forward into the
// scene. Pixel (ix, iy) samples the ray through continuous image
// coordinates (u, v) = (ix, iy); surface normals face the camera (nz < 0
// for visible pixels).
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    if (fx <= 0.0 || fy <= 0.0)
      throw ConfigError("intrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0)
      throw ConfigError("intrinsics: image dimensions must be positive");
    if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height))
      throw ConfigError("intrinsics: principal point must lie inside the image");
  }

  // Unit-z direction of the viewing ray through (u, v). Depth along this
  // ray equals camera z, which is what DepthImage stores.
  Eigen::Vector3d ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }
};

inline Eigen::Vector2d project(const Eigen::Vector3d& point,
                               const CameraIntrinsics& intr) {
  if (point.z() <= 0.0)
    throw std::domain_error("project: point must have z > 0");
  return {intr.fx * point.x() / point.z() + intr.cx,
          intr.fy * point.y() / point.z() + intr.cy};
}

inline Eigen::Vector3d backproject(double u, double v, double depth,
                                   const CameraIntrinsics& intr) {
  if (depth <= 0.0)
    throw std::domain_error("backproject: depth must be > 0");
  return {(u - intr.cx) / intr.fx * depth, (v - intr.cy) / intr.fy * depth,
          depth};
}

}  // namespace glassdepth
