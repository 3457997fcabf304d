#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <vector>

#include "glassdepth/errors.hpp"

namespace glassdepth {

// Row-major raster container shared by all image types.
template <typename T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  T& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  const T& at(int x, int y) const {
    return data[static_cast<size_t>(y) * width + x];
  }
  T& operator[](size_t i) { return data[i]; }
  const T& operator[](size_t i) const { return data[i]; }

  size_t size() const { return data.size(); }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  bool same_shape(int w, int h) const { return width == w && height == h; }

  bool operator==(const Raster& other) const {
    return width == other.width && height == other.height &&
           data == other.data;
  }
};

inline void require_shape(int w, int h, int w2, int h2, const char* what) {
  if (w != w2 || h != h2)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

// Per-pixel range in meters along the camera z axis. 0.0 is the invalid
// sentinel; valid values are finite and positive.
struct DepthImage : Raster<double> {
  static constexpr double kInvalid = 0.0;

  DepthImage() = default;
  DepthImage(int w, int h, double fill = kInvalid) : Raster<double>(w, h, fill) {}

  bool valid(int x, int y) const {
    double d = at(x, y);
    return d > 0.0 && std::isfinite(d);
  }
  bool valid_at(size_t i) const {
    double d = data[i];
    return d > 0.0 && std::isfinite(d);
  }
  int valid_count() const {
    int n = 0;
    for (double d : data)
      if (d > 0.0 && std::isfinite(d)) ++n;
    return n;
  }
};

// Per-pixel unit surface normals in camera coordinates. A zero vector marks
// an undefined normal (ray missed all geometry).
struct NormalMap : Raster<Eigen::Vector3d> {
  NormalMap() = default;
  NormalMap(int w, int h) : Raster<Eigen::Vector3d>(w, h, Eigen::Vector3d::Zero()) {}

  bool defined(int x, int y) const { return at(x, y).squaredNorm() > 0.0; }
};

// Per-pixel boolean transparency flag (true = transparent surface).
struct TransparencyMask : Raster<uint8_t> {
  TransparencyMask() = default;
  TransparencyMask(int w, int h, bool fill = false)
      : Raster<uint8_t>(w, h, fill ? 1 : 0) {}

  bool is_transparent(int x, int y) const { return at(x, y) != 0; }
  int count() const {
    int n = 0;
    for (uint8_t v : data) n += v ? 1 : 0;
    return n;
  }
};

enum BoundaryLabel : uint8_t {
  kNonEdge = 0,
  kOcclusion = 1,
  kContact = 2,
};

// Boundary classes plus the occlusion probability that feeds the
// down-weighting of normal constraints.
struct BoundaryMap {
  Raster<uint8_t> labels;
  Raster<double> occlusion_prob;

  BoundaryMap() = default;
  BoundaryMap(int w, int h)
      : labels(w, h, kNonEdge), occlusion_prob(w, h, 0.0) {}

  int width() const { return labels.width; }
  int height() const { return labels.height; }

  bool operator==(const BoundaryMap& other) const {
    return labels == other.labels && occlusion_prob == other.occlusion_prob;
  }
};

}  // namespace glassdepth
