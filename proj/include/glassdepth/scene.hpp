#pragma once

#include <optional>
#include <string>

#include "glassdepth/camera.hpp"
#include "glassdepth/image.hpp"
#include "glassdepth/primitives.hpp"

namespace glassdepth {

// One scene: oracle ground truth (gt_*) plus the possibly corrupted and
// perturbed pipeline inputs (raw_depth, input_*). All rasters share
// dimensions. The spec is kept so corruption can re-render backgrounds.
struct Scene {
  CameraIntrinsics intrinsics;

  DepthImage gt_depth;
  DepthImage raw_depth;
  NormalMap gt_normals;
  NormalMap input_normals;
  TransparencyMask gt_mask;
  TransparencyMask input_mask;
  BoundaryMap gt_boundary;
  BoundaryMap input_boundary;

  std::string id;
  uint64_t seed = 0;
  std::optional<SceneSpec> spec;

  void check_dimensions() const {
    const int w = intrinsics.width, h = intrinsics.height;
    auto check = [&](int rw, int rh, const char* what) {
      if (rw != 0 || rh != 0) require_shape(rw, rh, w, h, what);
    };
    check(gt_depth.width, gt_depth.height, "gt_depth");
    check(raw_depth.width, raw_depth.height, "raw_depth");
    check(gt_normals.width, gt_normals.height, "gt_normals");
    check(input_normals.width, input_normals.height, "input_normals");
    check(gt_mask.width, gt_mask.height, "gt_mask");
    check(input_mask.width, input_mask.height, "input_mask");
    check(gt_boundary.labels.width, gt_boundary.labels.height, "gt_boundary");
    check(input_boundary.labels.width, input_boundary.labels.height,
          "input_boundary");
  }
};

}  // namespace glassdepth
