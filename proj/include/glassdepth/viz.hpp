#pragma once

#include <array>

#include "glassdepth/image.hpp"

namespace glassdepth {

using RgbImage = Raster<std::array<uint8_t, 3>>;

// (n+1)/2 channel encoding, rounded half-up; undefined normals render black.
RgbImage normal_rgb(const NormalMap& normals);

// Jet-style false color over the valid depth range; invalid pixels are
// black. The range actually used is reported through lo/hi for filenames.
RgbImage false_color_depth(const DepthImage& depth, double* lo = nullptr,
                           double* hi = nullptr);

// Occlusion red, contact green, non-edge black.
RgbImage boundary_overlay(const BoundaryMap& b);

// |pred - gt| scaled to its own maximum as a red ramp; pixels lacking a
// valid pair are black.
RgbImage error_heatmap(const DepthImage& pred, const DepthImage& gt);

}  // namespace glassdepth
