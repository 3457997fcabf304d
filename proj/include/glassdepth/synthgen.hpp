#pragma once

#include <optional>

#include "glassdepth/primitives.hpp"
#include "glassdepth/scene.hpp"

namespace glassdepth {

// Sensor corruption applied to ground-truth depth. Type II replaces depth
// under the transparency mask with the background seen through the object;
// Type I punches contiguous holes; opaque pixels get Gaussian range noise.
struct CorruptionModel {
  double type1_hole_rate = 0.0;  // fraction of mask pixels zeroed
  double type1_blob_radius = 3.0;
  bool type2_passthrough = true;
  double depth_noise_sigma = 0.0;  // meters, opaque pixels only
  uint64_t seed = 0;

  void validate() const {
    if (type1_hole_rate < 0.0 || type1_hole_rate > 1.0)
      throw ConfigError("corruption: type1_hole_rate must be in [0,1]");
    if (type1_blob_radius < 0.0)
      throw ConfigError("corruption: type1_blob_radius must be >= 0");
    if (depth_noise_sigma < 0.0)
      throw ConfigError("corruption: depth_noise_sigma must be >= 0");
  }
};

// Stand-in for prediction error on the non-depth inputs.
struct PerturbationModel {
  double normal_angle_sigma = 0.0;  // degrees
  double boundary_dropout = 0.0;    // fraction of boundary pixels cleared
  int boundary_dilation = 0;        // pixels
  double mask_fn_rate = 0.0;
  double mask_fp_rate = 0.0;
  uint64_t seed = 0;

  void validate() const {
    if (normal_angle_sigma < 0.0)
      throw ConfigError("perturbation: normal_angle_sigma must be >= 0");
    for (double r : {boundary_dropout, mask_fn_rate, mask_fp_rate})
      if (r < 0.0 || r > 1.0)
        throw ConfigError("perturbation: rates must be in [0,1]");
    if (boundary_dilation < 0)
      throw ConfigError("perturbation: boundary_dilation must be >= 0");
  }
};

struct RayHit {
  double t = 0.0;  // ray parameter; equals z-depth for unit-z camera rays
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();  // outward, unnormalized sign
};

// Analytic intersection of one ray with one primitive. Returns the nearest
// hit with t > 1e-9, or nullopt. The normal is not yet camera-flipped.
std::optional<RayHit> intersect(const Primitive& prim,
                                const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& dir);

// Casts one camera ray through every pixel and fills gt_depth, gt_normals,
// gt_mask (and gt_boundary via derive_boundaries). Normals are flipped to
// face the camera along the viewing ray.
Scene render_scene(const SceneSpec& spec);

// Labels occlusion boundaries (depth steps, nearer side) and contact edges
// (mask border with continuous off-mask depth).
BoundaryMap derive_boundaries(const DepthImage& gt_depth,
                              const TransparencyMask& gt_mask,
                              double occ_threshold = 0.02,
                              double rel_threshold = 0.03);

// Produces raw_depth from gt_depth per the corruption model. Type II
// re-casting needs scene.spec.
DepthImage corrupt_depth(const Scene& scene, const CorruptionModel& model);

// Returns a copy of the scene with input_normals / input_boundary /
// input_mask filled from perturbed ground truth.
Scene perturb_inputs(const Scene& scene, const PerturbationModel& model);

}  // namespace glassdepth
