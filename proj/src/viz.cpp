#include "glassdepth/viz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace glassdepth {

namespace {

uint8_t to_byte(double v) {
  return static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
}

std::array<uint8_t, 3> jet(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto channel = [](double v) {
    return to_byte(255.0 * std::clamp(v, 0.0, 1.0));
  };
  return {channel(std::min(4.0 * t - 1.5, -4.0 * t + 4.5)),
          channel(std::min(4.0 * t - 0.5, -4.0 * t + 3.5)),
          channel(std::min(4.0 * t + 0.5, -4.0 * t + 2.5))};
}

}  // namespace

RgbImage normal_rgb(const NormalMap& normals) {
  RgbImage out(normals.width, normals.height, {0, 0, 0});
  for (size_t i = 0; i < normals.size(); ++i) {
    const Eigen::Vector3d& n = normals[i];
    if (n.squaredNorm() == 0.0) continue;
    auto encode = [](double c) {
      return to_byte(std::floor((c + 1.0) / 2.0 * 255.0 + 0.5));
    };
    out[i] = {encode(n.x()), encode(n.y()), encode(n.z())};
  }
  return out;
}

RgbImage false_color_depth(const DepthImage& depth, double* lo, double* hi) {
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < depth.size(); ++i) {
    if (!depth.valid_at(i)) continue;
    dmin = std::min(dmin, depth[i]);
    dmax = std::max(dmax, depth[i]);
  }
  if (!(dmin <= dmax)) dmin = dmax = 0.0;  // no valid pixels
  if (lo) *lo = dmin;
  if (hi) *hi = dmax;

  RgbImage out(depth.width, depth.height, {0, 0, 0});
  const double span = dmax - dmin;
  for (size_t i = 0; i < depth.size(); ++i) {
    if (!depth.valid_at(i)) continue;
    out[i] = jet(span > 0.0 ? (depth[i] - dmin) / span : 0.5);
  }
  return out;
}

RgbImage boundary_overlay(const BoundaryMap& b) {
  RgbImage out(b.width(), b.height(), {0, 0, 0});
  for (size_t i = 0; i < b.labels.size(); ++i) {
    if (b.labels[i] == kOcclusion) out[i] = {255, 0, 0};
    else if (b.labels[i] == kContact) out[i] = {0, 255, 0};
  }
  return out;
}

RgbImage error_heatmap(const DepthImage& pred, const DepthImage& gt) {
  require_shape(pred.width, pred.height, gt.width, gt.height, "error_heatmap");
  Raster<double> err(pred.width, pred.height, -1.0);
  double emax = 0.0;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!pred.valid_at(i) || !gt.valid_at(i)) continue;
    err[i] = std::abs(pred[i] - gt[i]);
    emax = std::max(emax, err[i]);
  }
  RgbImage out(pred.width, pred.height, {0, 0, 0});
  for (size_t i = 0; i < err.size(); ++i) {
    if (err[i] < 0.0) continue;
    const double t = emax > 0.0 ? err[i] / emax : 0.0;
    out[i] = {to_byte(255.0 * t), 0, 0};
  }
  return out;
}

}  // namespace glassdepth
