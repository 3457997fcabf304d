#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "glassdepth/image.hpp"

namespace glassdepth {

struct DepthMetrics {
  double rmse = 0.0;  // meters
  double rel = 0.0;   // median |p-t|/t
  double mae = 0.0;   // meters
  double delta_105 = 0.0, delta_110 = 0.0, delta_125 = 0.0;  // percent
};

struct NormalMetrics {
  double mean_deg = 0.0, median_deg = 0.0;
  double pct_1125 = 0.0, pct_225 = 0.0, pct_30 = 0.0;  // percent
};

struct MaskMetrics {
  double iou = 0.0;
  double tpr = 0.0;  // percent
};

constexpr int kEvalWidth = 256;
constexpr int kEvalHeight = 144;

// Area-weighted downsampling for the evaluation protocol. A target pixel is
// invalid when more than half its source footprint is invalid; mask pixels
// take the majority vote with ties resolved to transparent.
DepthImage eval_resize(const DepthImage& src, int target_w, int target_h);
TransparencyMask eval_resize(const TransparencyMask& src, int target_w,
                             int target_h);

// Metrics over pixels where eval_mask is set and gt is valid. Empty
// evaluation sets yield nullopt, never NaN.
std::optional<DepthMetrics> depth_metrics(const DepthImage& pred,
                                          const DepthImage& gt,
                                          const TransparencyMask& eval_mask);

std::optional<NormalMetrics> normal_metrics(const NormalMap& pred,
                                            const NormalMap& gt,
                                            const TransparencyMask& eval_mask);

MaskMetrics mask_metrics(const TransparencyMask& pred,
                         const TransparencyMask& gt);

// Field-wise mean over per-scene results.
DepthMetrics average(const std::vector<DepthMetrics>& runs);

struct AblationReport {
  struct Entry {
    std::string label;
    DepthMetrics metrics;
    double delta_rmse = 0.0;  // against the first-listed run
  };
  struct Check {
    std::string description;
    bool pass = false;
  };

  std::vector<Entry> rows;  // sorted by rmse ascending
  std::vector<Check> checks;

  std::string csv() const;
  std::string table() const;  // console form, best value per metric starred
};

// Compares runs (label -> aggregated metrics over one scene set) and
// evaluates the expected orderings between the standard modes.
AblationReport ablation_report(
    const std::vector<std::pair<std::string, DepthMetrics>>& runs);

}  // namespace glassdepth
