#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <string>
#include <vector>

#include "glassdepth/camera.hpp"
#include "glassdepth/errors.hpp"

namespace glassdepth {

// Analytic scene primitive. Tagged struct rather than a class hierarchy so
// scene specs stay trivially serializable.
struct Primitive {
  enum class Kind { kPlane, kSphere, kBox, kCylinder };

  Kind kind = Kind::kPlane;
  bool transparent = false;

  // plane: point + unit normal
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d(0, 0, -1);
  // sphere: center + radius (radius shared with cylinder)
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
  // box: center + half extents + rotation
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  // cylinder: base center + unit axis + radius + height
  Eigen::Vector3d base = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d(0, 0, 1);
  double height = 0.0;

  static Primitive make_plane(const Eigen::Vector3d& point,
                              const Eigen::Vector3d& normal,
                              bool transparent = false) {
    Primitive p;
    p.kind = Kind::kPlane;
    p.point = point;
    p.normal = normal.normalized();
    p.transparent = transparent;
    return p;
  }

  static Primitive make_sphere(const Eigen::Vector3d& center, double radius,
                               bool transparent = false) {
    Primitive p;
    p.kind = Kind::kSphere;
    p.center = center;
    p.radius = radius;
    p.transparent = transparent;
    return p;
  }

  static Primitive make_box(const Eigen::Vector3d& center,
                            const Eigen::Vector3d& half_extents,
                            const Eigen::Quaterniond& rotation,
                            bool transparent = false) {
    Primitive p;
    p.kind = Kind::kBox;
    p.center = center;
    p.half_extents = half_extents;
    p.rotation = rotation.normalized();
    p.transparent = transparent;
    return p;
  }

  static Primitive make_cylinder(const Eigen::Vector3d& base,
                                 const Eigen::Vector3d& axis, double radius,
                                 double height, bool transparent = false) {
    Primitive p;
    p.kind = Kind::kCylinder;
    p.base = base;
    p.axis = axis.normalized();
    p.radius = radius;
    p.height = height;
    p.transparent = transparent;
    return p;
  }

  void validate() const {
    switch (kind) {
      case Kind::kPlane:
        if (normal.norm() < 1e-12)
          throw ConfigError("primitive: plane normal is degenerate");
        break;
      case Kind::kSphere:
        if (radius <= 0.0) throw ConfigError("primitive: sphere radius <= 0");
        break;
      case Kind::kBox:
        if ((half_extents.array() <= 0.0).any())
          throw ConfigError("primitive: box half extents must be positive");
        break;
      case Kind::kCylinder:
        if (radius <= 0.0) throw ConfigError("primitive: cylinder radius <= 0");
        if (height <= 0.0) throw ConfigError("primitive: cylinder height <= 0");
        if (axis.norm() < 1e-12)
          throw ConfigError("primitive: cylinder axis is degenerate");
        break;
    }
  }
};

// Recipe for one oracle scene: camera, posed primitives, and the seed that
// drives corruption/perturbation. Poses are explicit; resting contact is
// encoded by construction rather than simulated.
struct SceneSpec {
  CameraIntrinsics intrinsics;
  std::vector<Primitive> primitives;
  int support_plane = -1;  // index into primitives
  uint64_t seed = 0;
  double z_max = 10.0;

  void validate() const {
    intrinsics.validate();
    if (z_max <= 0.0) throw ConfigError("scene spec: z_max must be positive");
    int transparent = 0;
    for (const auto& p : primitives) {
      p.validate();
      if (p.transparent) ++transparent;
    }
    if (support_plane < 0 ||
        support_plane >= static_cast<int>(primitives.size()) ||
        primitives[support_plane].kind != Primitive::Kind::kPlane ||
        primitives[support_plane].transparent)
      throw ConfigError("scene spec: support_plane must index an opaque plane");
    if (transparent < 1 || transparent > 5)
      throw ConfigError("scene spec: need 1-5 transparent primitives");
  }
};

}  // namespace glassdepth
