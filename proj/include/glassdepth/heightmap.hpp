#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <vector>

#include "glassdepth/camera.hpp"
#include "glassdepth/image.hpp"

namespace glassdepth {

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate() const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    if ((gram - Eigen::Matrix3d::Identity()).norm() > 1e-9 ||
        std::abs(rotation.determinant() - 1.0) > 1e-9)
      throw ConfigError("rigid transform: rotation must be proper orthonormal");
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
};

// Axis-aligned workspace box in the world frame, gridded in x/y.
struct Workspace {
  Eigen::Vector3d min_corner = Eigen::Vector3d::Zero();
  Eigen::Vector3d max_corner = Eigen::Vector3d::Zero();
  double resolution = 0.002;  // meters per cell
  RigidTransform cam_to_world;

  void validate() const {
    if ((max_corner - min_corner).minCoeff() <= 0.0)
      throw ConfigError("workspace: extents must be positive");
    if (resolution <= 0.0)
      throw ConfigError("workspace: resolution must be positive");
    cam_to_world.validate();
  }

  int cells_x() const {
    return std::max<int>(
        1, static_cast<int>(std::ceil((max_corner.x() - min_corner.x()) /
                                          resolution -
                                      1e-9)));
  }
  int cells_y() const {
    return std::max<int>(
        1, static_cast<int>(std::ceil((max_corner.y() - min_corner.y()) /
                                          resolution -
                                      1e-9)));
  }
};

struct Heightmap {
  Raster<double> height;
  Raster<uint8_t> valid;

  Heightmap() = default;
  Heightmap(int w, int h) : height(w, h, 0.0), valid(w, h, 0) {}

  int width() const { return height.width; }
  int rows() const { return height.height; }

  bool operator==(const Heightmap& other) const {
    return height == other.height && valid == other.valid;
  }
};

// One world-frame point per valid depth pixel, in row-major pixel order.
std::vector<Eigen::Vector3d> backproject_cloud(const DepthImage& depth,
                                               const CameraIntrinsics& intr,
                                               const RigidTransform& cam_to_world);

// Max-z grid over the workspace footprint; cells without points are invalid
// and points outside the bounds are dropped.
Heightmap build_heightmap(const std::vector<Eigen::Vector3d>& cloud,
                          const Workspace& ws);

// Rotations about the grid center by k*(360/n) degrees, k = 0..n-1.
// Element 0 is the input itself; 90-degree multiples on square grids are
// exact index permutations; everything else is bilinear with invalidity
// propagating from any contributing source cell.
std::vector<Heightmap> rotation_stack(const Heightmap& h, int n = 16);

}  // namespace glassdepth
