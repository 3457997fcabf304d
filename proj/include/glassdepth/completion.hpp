#pragma once

#include <utility>
#include <vector>

#include "glassdepth/camera.hpp"
#include "glassdepth/image.hpp"

namespace glassdepth {

struct EnergyWeights {
  double lambda_d = 1000.0;
  double lambda_s = 0.001;
  double lambda_n = 1.0;

  void validate() const {
    if (lambda_d < 0.0 || lambda_s < 0.0 || lambda_n < 0.0)
      throw ConfigError("energy weights must be nonnegative");
    if (lambda_d == 0.0 && lambda_s == 0.0 && lambda_n == 0.0)
      throw ConfigError("energy weights must not all be zero");
  }
};

struct SolverConfig {
  double tolerance = 1e-6;    // relative preconditioned residual
  long max_iterations = -1;   // < 0 means 10 * n_unknowns
};

enum class RowKind : uint8_t { kData, kSmooth, kNormal };

// Linear least-squares system over per-pixel depths. Each row has at most
// two nonzeros; the sqrt of the term weight is already folded into the
// coefficients, so the energy is simply the sum of squared row residuals.
struct SparseSystem {
  struct Row {
    RowKind kind;
    int a = -1, b = -1;  // unknown indices; b < 0 for data rows
    double ca = 0.0, cb = 0.0, rhs = 0.0;
  };

  int width = 0, height = 0;  // unknown = pixel, column-major-free row order
  std::vector<Row> rows;

  int n_unknowns() const { return width * height; }
};

struct IndeterminateRegion {
  std::vector<int> pixels;  // sorted linear indices
  bool indeterminate = false;
};

struct SolveDiagnostics {
  long iterations = 0;
  bool converged = true;
  double relative_residual = 0.0;
  double energy = 0.0;
  double energy_data = 0.0;
  double energy_smooth = 0.0;
  double energy_normal = 0.0;
  std::vector<double> energy_trace;  // E at x0, then after each iteration
  std::vector<IndeterminateRegion> regions;
  double wall_time_sec = 0.0;  // in-memory only; serialized artifacts omit it
};

// Everything complete_depth needs beyond the scene inputs. use_mask=false
// and use_boundary_weighting=false are the ablation switches.
struct CompletionConfig {
  EnergyWeights weights;
  SolverConfig solver;
  double boundary_sigma = 0.0;  // Gaussian blur of occlusion probability
  double b_cut = 0.01;          // wall threshold for indeterminacy flood fill
  bool use_mask = true;
  bool use_boundary_weighting = true;
};

// Zeroes depth under the transparency mask.
DepthImage clean_depth(const DepthImage& raw, const TransparencyMask& mask);

// B = (1 - p)^2 from the (optionally blurred) occlusion probability.
// Contact pixels never reduce B.
Raster<double> boundary_downweight(const BoundaryMap& b, double smoothing_sigma);

// Assembles data rows at observed pixels, and smoothness plus
// normal-consistency rows per right/down neighbor pair; normal rows are
// weighted by min(B_i, B_j).
SparseSystem build_system(const DepthImage& depth, const NormalMap& normals,
                          const Raster<double>& B, const CameraIntrinsics& intr,
                          const EnergyWeights& weights);

// Jacobi-preconditioned conjugate gradients on the normal equations.
// Non-convergence returns the best iterate with converged=false.
std::pair<DepthImage, SolveDiagnostics> solve(const SparseSystem& sys,
                                              const SolverConfig& cfg);

// Connected components of sentinel pixels; a component is indeterminate if
// low-B pixels (B < b_cut) wall it off from every observed pixel.
std::vector<IndeterminateRegion> detect_indeterminate_regions(
    const DepthImage& depth_after_clean, const Raster<double>& B,
    double b_cut = 0.01);

// clean_depth -> boundary_downweight -> build_system -> solve, honoring the
// ablation switches. Output pixels that came out nonpositive are sentinel.
std::pair<DepthImage, SolveDiagnostics> complete_depth(
    const DepthImage& raw_depth, const NormalMap& normals,
    const BoundaryMap& boundary, const TransparencyMask& mask,
    const CameraIntrinsics& intr, const CompletionConfig& cfg = {});

}  // namespace glassdepth
