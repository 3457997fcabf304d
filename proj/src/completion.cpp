#include "glassdepth/completion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>

namespace glassdepth {

DepthImage clean_depth(const DepthImage& raw, const TransparencyMask& mask) {
  require_shape(raw.width, raw.height, mask.width, mask.height, "clean_depth");
  DepthImage out = raw;
  for (size_t i = 0; i < out.size(); ++i)
    if (mask[i]) out[i] = DepthImage::kInvalid;
  return out;
}

namespace {

Raster<double> gaussian_blur(const Raster<double>& src, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k)
    kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));

  // Separable passes; the kernel is renormalized over in-bounds taps so
  // border pixels stay convex combinations.
  Raster<double> tmp(src.width, src.height), out(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double sum = 0.0, wsum = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        if (x + k < 0 || x + k >= src.width) continue;
        sum += kernel[k + radius] * src.at(x + k, y);
        wsum += kernel[k + radius];
      }
      tmp.at(x, y) = sum / wsum;
    }
  }
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double sum = 0.0, wsum = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        if (y + k < 0 || y + k >= src.height) continue;
        sum += kernel[k + radius] * tmp.at(x, y + k);
        wsum += kernel[k + radius];
      }
      out.at(x, y) = sum / wsum;
    }
  }
  return out;
}

}  // namespace

Raster<double> boundary_downweight(const BoundaryMap& b,
                                   double smoothing_sigma) {
  Raster<double> p = b.occlusion_prob;
  if (smoothing_sigma > 0.0) p = gaussian_blur(p, smoothing_sigma);
  Raster<double> B(p.width, p.height);
  for (size_t i = 0; i < p.size(); ++i) {
    double q = std::clamp(p[i], 0.0, 1.0);
    B[i] = (1.0 - q) * (1.0 - q);
    if (b.labels[i] == kContact) B[i] = 1.0;
  }
  return B;
}

SparseSystem build_system(const DepthImage& depth, const NormalMap& normals,
                          const Raster<double>& B, const CameraIntrinsics& intr,
                          const EnergyWeights& weights) {
  weights.validate();
  const int w = depth.width, h = depth.height;
  require_shape(w, h, normals.width, normals.height, "build_system normals");
  require_shape(w, h, B.width, B.height, "build_system weight field");
  require_shape(w, h, intr.width, intr.height, "build_system intrinsics");
  if (depth.valid_count() == 0)
    throw NumericalError("build_system: no observed depth pixels");

  SparseSystem sys;
  sys.width = w;
  sys.height = h;
  sys.rows.reserve(static_cast<size_t>(w) * h * 3);

  const double sqrt_d = std::sqrt(weights.lambda_d);
  const double sqrt_s = std::sqrt(weights.lambda_s);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      if (weights.lambda_d > 0.0 && depth.valid(x, y))
        sys.rows.push_back({RowKind::kData, i, -1, sqrt_d, 0.0,
                            sqrt_d * depth.at(x, y)});

      // One smoothness and one normal row per right/down pair. The normal
      // constraint N_i . (P_j - P_i) is linear in depth because
      // P(u,v) = D(u,v) * ray(u,v).
      for (int k = 0; k < 2; ++k) {
        const int nx = x + (k == 0 ? 1 : 0), ny = y + (k == 0 ? 0 : 1);
        if (nx >= w || ny >= h) continue;
        const int j = ny * w + nx;
        if (weights.lambda_s > 0.0)
          sys.rows.push_back({RowKind::kSmooth, i, j, sqrt_s, -sqrt_s, 0.0});
        if (weights.lambda_n > 0.0 && normals[i].squaredNorm() > 0.0) {
          const double bij = std::min(B[i], B[j]);
          if (bij > 0.0) {
            const double wn = std::sqrt(weights.lambda_n * bij);
            const Eigen::Vector3d& n = normals[i];
            const double ci = -wn * n.dot(intr.ray(x, y));
            const double cj = wn * n.dot(intr.ray(nx, ny));
            sys.rows.push_back({RowKind::kNormal, i, j, ci, cj, 0.0});
          }
        }
      }
    }
  }
  return sys;
}

namespace {

double row_residual(const SparseSystem::Row& r, const std::vector<double>& x) {
  double s = r.ca * x[r.a] - r.rhs;
  if (r.b >= 0) s += r.cb * x[r.b];
  return s;
}

void energy_by_kind(const SparseSystem& sys, const std::vector<double>& x,
                    double* e_data, double* e_smooth, double* e_normal) {
  *e_data = *e_smooth = *e_normal = 0.0;
  for (const auto& r : sys.rows) {
    double res = row_residual(r, x);
    double e = res * res;
    switch (r.kind) {
      case RowKind::kData: *e_data += e; break;
      case RowKind::kSmooth: *e_smooth += e; break;
      case RowKind::kNormal: *e_normal += e; break;
    }
  }
}

// Normal-equations matrix A^T A for the image grid. Rows couple only
// horizontally or vertically adjacent pixels, so the matrix is a 5-point
// stencil: diagonal plus one band at offset 1 and one at offset width.
struct StencilMatrix {
  int width = 0, height = 0;
  std::vector<double> diag, right, down;

  explicit StencilMatrix(const SparseSystem& sys)
      : width(sys.width),
        height(sys.height),
        diag(sys.n_unknowns(), 0.0),
        right(sys.n_unknowns(), 0.0),
        down(sys.n_unknowns(), 0.0) {
    for (const auto& r : sys.rows) {
      diag[r.a] += r.ca * r.ca;
      if (r.b < 0) continue;
      diag[r.b] += r.cb * r.cb;
      double off = r.ca * r.cb;
      if (r.b == r.a + 1)
        right[r.a] += off;
      else if (r.b == r.a + width)
        down[r.a] += off;
      else
        throw NumericalError("build_system produced a non-grid row");
    }
  }

  void multiply(const std::vector<double>& x, std::vector<double>& y) const {
    const int n = width * height;
    for (int i = 0; i < n; ++i) {
      double s = diag[i] * x[i];
      if ((i + 1) % width != 0) s += right[i] * x[i + 1];
      if (i % width != 0) s += right[i - 1] * x[i - 1];
      if (i + width < n) s += down[i] * x[i + width];
      if (i - width >= 0) s += down[i - width] * x[i - width];
      y[i] = s;
    }
  }
};

}  // namespace

std::pair<DepthImage, SolveDiagnostics> solve(const SparseSystem& sys,
                                              const SolverConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  const int n = sys.n_unknowns();
  if (n <= 0) throw NumericalError("solve: empty system");

  StencilMatrix H(sys);
  std::vector<double> atb(n, 0.0);
  for (const auto& r : sys.rows) {
    atb[r.a] += r.ca * r.rhs;
    if (r.b >= 0) atb[r.b] += r.cb * r.rhs;
  }

  // Start from the observations, mean-filling the holes.
  std::vector<double> x(n, 0.0);
  {
    std::vector<char> observed(n, 0);
    double sum = 0.0;
    long count = 0;
    for (const auto& r : sys.rows) {
      if (r.kind != RowKind::kData) continue;
      double d = r.rhs / r.ca;
      x[r.a] = d;
      observed[r.a] = 1;
      sum += d;
      ++count;
    }
    const double fill = count > 0 ? sum / count : 0.0;
    for (int i = 0; i < n; ++i)
      if (!observed[i]) x[i] = fill;
  }

  std::vector<double> inv_diag(n);
  for (int i = 0; i < n; ++i)
    inv_diag[i] = H.diag[i] > 0.0 ? 1.0 / H.diag[i] : 1.0;

  std::vector<double> r(n), z(n), p(n), q(n);
  H.multiply(x, q);
  for (int i = 0; i < n; ++i) r[i] = atb[i] - q[i];
  for (int i = 0; i < n; ++i) z[i] = r[i] * inv_diag[i];
  p = z;
  double gamma = 0.0;
  for (int i = 0; i < n; ++i) gamma += r[i] * z[i];
  const double gamma0 = gamma;

  SolveDiagnostics diag;
  double e_d, e_s, e_n;
  energy_by_kind(sys, x, &e_d, &e_s, &e_n);
  double energy = e_d + e_s + e_n;
  diag.energy_trace.push_back(energy);

  const long max_iters = cfg.max_iterations < 0 ? 10L * n : cfg.max_iterations;
  const double tol2 = cfg.tolerance * cfg.tolerance;
  diag.converged = false;
  long k = 0;
  for (; k < max_iters; ++k) {
    if (gamma0 <= 0.0 || gamma <= tol2 * gamma0) {
      diag.converged = true;
      break;
    }
    H.multiply(p, q);
    double pq = 0.0;
    for (int i = 0; i < n; ++i) pq += p[i] * q[i];
    if (pq <= 0.0) break;  // stagnation; keep the best iterate
    const double alpha = gamma / pq;
    for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] -= alpha * q[i];
    // Exact CG identity: the objective drops by alpha * gamma per step.
    energy -= alpha * gamma;
    diag.energy_trace.push_back(energy);

    for (int i = 0; i < n; ++i) z[i] = r[i] * inv_diag[i];
    double gamma_new = 0.0;
    for (int i = 0; i < n; ++i) gamma_new += r[i] * z[i];
    const double beta = gamma_new / gamma;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    gamma = gamma_new;
  }
  if (k == max_iters && (gamma0 <= 0.0 || gamma <= tol2 * gamma0))
    diag.converged = true;

  diag.iterations = k;
  diag.relative_residual = gamma0 > 0.0 ? std::sqrt(gamma / gamma0) : 0.0;
  energy_by_kind(sys, x, &e_d, &e_s, &e_n);
  diag.energy_data = e_d;
  diag.energy_smooth = e_s;
  diag.energy_normal = e_n;
  diag.energy = e_d + e_s + e_n;

  DepthImage out(sys.width, sys.height);
  for (int i = 0; i < n; ++i)
    out[i] = (std::isfinite(x[i]) && x[i] > 0.0) ? x[i] : DepthImage::kInvalid;

  diag.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return {std::move(out), std::move(diag)};
}

std::vector<IndeterminateRegion> detect_indeterminate_regions(
    const DepthImage& depth_after_clean, const Raster<double>& B,
    double b_cut) {
  const int w = depth_after_clean.width, h = depth_after_clean.height;
  require_shape(w, h, B.width, B.height, "detect_indeterminate_regions");
  const int n = w * h;
  const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};

  std::vector<int> component(n, -1);
  std::vector<IndeterminateRegion> regions;

  for (int start = 0; start < n; ++start) {
    if (depth_after_clean.valid_at(start) || component[start] >= 0) continue;
    const int id = static_cast<int>(regions.size());
    IndeterminateRegion region;
    std::deque<int> queue{start};
    component[start] = id;
    while (!queue.empty()) {
      int i = queue.front();
      queue.pop_front();
      region.pixels.push_back(i);
      int x = i % w, y = i / w;
      for (int k = 0; k < 4; ++k) {
        int nx2 = x + dx[k], ny2 = y + dy[k];
        if (nx2 < 0 || nx2 >= w || ny2 < 0 || ny2 >= h) continue;
        int j = ny2 * w + nx2;
        if (component[j] >= 0 || depth_after_clean.valid_at(j)) continue;
        component[j] = id;
        queue.push_back(j);
      }
    }
    std::sort(region.pixels.begin(), region.pixels.end());
    regions.push_back(std::move(region));
  }

  // Flood fill from each component over pixels with B >= b_cut; reaching an
  // observed pixel means some constraint path anchors the region's depth.
  std::vector<int> stamp(n, -1);
  for (size_t id = 0; id < regions.size(); ++id) {
    std::deque<int> queue;
    bool reached = false;
    for (int i : regions[id].pixels) {
      stamp[i] = static_cast<int>(id);
      queue.push_back(i);
    }
    while (!queue.empty() && !reached) {
      int i = queue.front();
      queue.pop_front();
      int x = i % w, y = i / w;
      for (int k = 0; k < 4; ++k) {
        int nx2 = x + dx[k], ny2 = y + dy[k];
        if (nx2 < 0 || nx2 >= w || ny2 < 0 || ny2 >= h) continue;
        int j = ny2 * w + nx2;
        if (stamp[j] == static_cast<int>(id)) continue;
        if (B[j] < b_cut) continue;  // wall
        if (depth_after_clean.valid_at(j)) {
          reached = true;
          break;
        }
        stamp[j] = static_cast<int>(id);
        queue.push_back(j);
      }
    }
    regions[id].indeterminate = !reached;
  }
  return regions;
}

std::pair<DepthImage, SolveDiagnostics> complete_depth(
    const DepthImage& raw_depth, const NormalMap& normals,
    const BoundaryMap& boundary, const TransparencyMask& mask,
    const CameraIntrinsics& intr, const CompletionConfig& cfg) {
  DepthImage cleaned = cfg.use_mask ? clean_depth(raw_depth, mask) : raw_depth;
  Raster<double> B =
      cfg.use_boundary_weighting
          ? boundary_downweight(boundary, cfg.boundary_sigma)
          : Raster<double>(raw_depth.width, raw_depth.height, 1.0);
  auto regions = detect_indeterminate_regions(cleaned, B, cfg.b_cut);
  SparseSystem sys = build_system(cleaned, normals, B, intr, cfg.weights);
  auto [out, diag] = solve(sys, cfg.solver);
  diag.regions = std::move(regions);
  return {std::move(out), std::move(diag)};
}

}  // namespace glassdepth
