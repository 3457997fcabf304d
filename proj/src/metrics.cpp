#include "glassdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "glassdepth/errors.hpp"

namespace glassdepth {

namespace {

// Calls fn(src_x, src_y, overlap_area) for every source pixel overlapping
// the footprint of target pixel (tx, ty).
template <typename Fn>
void footprint(int src_w, int src_h, int target_w, int target_h, int tx,
               int ty, Fn&& fn) {
  const double sx = static_cast<double>(src_w) / target_w;
  const double sy = static_cast<double>(src_h) / target_h;
  const double x0 = tx * sx, x1 = (tx + 1) * sx;
  const double y0 = ty * sy, y1 = (ty + 1) * sy;
  const int ix0 = static_cast<int>(std::floor(x0));
  const int iy0 = static_cast<int>(std::floor(y0));
  for (int iy = iy0; iy < y1 && iy < src_h; ++iy) {
    const double wy = std::min<double>(y1, iy + 1) - std::max<double>(y0, iy);
    if (wy <= 0.0) continue;
    for (int ix = ix0; ix < x1 && ix < src_w; ++ix) {
      const double wx = std::min<double>(x1, ix + 1) - std::max<double>(x0, ix);
      if (wx <= 0.0) continue;
      fn(ix, iy, wx * wy);
    }
  }
}

double lower_median(std::vector<double>& v) {
  const size_t k = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + k, v.end());
  return v[k];
}

}  // namespace

DepthImage eval_resize(const DepthImage& src, int target_w, int target_h) {
  if (target_w <= 0 || target_h <= 0)
    throw ConfigError("eval_resize: target dimensions must be positive");
  if (src.width == target_w && src.height == target_h) return src;
  DepthImage out(target_w, target_h);
  for (int ty = 0; ty < target_h; ++ty) {
    for (int tx = 0; tx < target_w; ++tx) {
      double valid_w = 0.0, total_w = 0.0, sum = 0.0;
      footprint(src.width, src.height, target_w, target_h, tx, ty,
                [&](int ix, int iy, double w) {
                  total_w += w;
                  if (src.valid(ix, iy)) {
                    valid_w += w;
                    sum += w * src.at(ix, iy);
                  }
                });
      if (valid_w >= 0.5 * total_w && valid_w > 0.0)
        out.at(tx, ty) = sum / valid_w;
    }
  }
  return out;
}

TransparencyMask eval_resize(const TransparencyMask& src, int target_w,
                             int target_h) {
  if (target_w <= 0 || target_h <= 0)
    throw ConfigError("eval_resize: target dimensions must be positive");
  if (src.width == target_w && src.height == target_h) return src;
  TransparencyMask out(target_w, target_h);
  for (int ty = 0; ty < target_h; ++ty) {
    for (int tx = 0; tx < target_w; ++tx) {
      double on_w = 0.0, total_w = 0.0;
      footprint(src.width, src.height, target_w, target_h, tx, ty,
                [&](int ix, int iy, double w) {
                  total_w += w;
                  if (src.at(ix, iy)) on_w += w;
                });
      out.at(tx, ty) = on_w >= 0.5 * total_w ? 1 : 0;  // ties -> transparent
    }
  }
  return out;
}

std::optional<DepthMetrics> depth_metrics(const DepthImage& pred,
                                          const DepthImage& gt,
                                          const TransparencyMask& eval_mask) {
  require_shape(pred.width, pred.height, gt.width, gt.height, "depth_metrics");
  require_shape(pred.width, pred.height, eval_mask.width, eval_mask.height,
                "depth_metrics mask");
  std::vector<double> rel_errors;
  double sq_sum = 0.0, abs_sum = 0.0;
  long n105 = 0, n110 = 0, n125 = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!eval_mask[i] || !gt.valid_at(i)) continue;
    const double t = gt[i];
    const double err = pred[i] - t;
    sq_sum += err * err;
    abs_sum += std::abs(err);
    const double rel = std::abs(err) / t;
    rel_errors.push_back(rel);
    if (rel < 0.05) ++n105;
    if (rel < 0.10) ++n110;
    if (rel < 0.25) ++n125;
  }
  if (rel_errors.empty()) return std::nullopt;
  const double n = static_cast<double>(rel_errors.size());
  DepthMetrics m;
  m.rmse = std::sqrt(sq_sum / n);
  m.mae = abs_sum / n;
  m.rel = lower_median(rel_errors);
  m.delta_105 = 100.0 * n105 / n;
  m.delta_110 = 100.0 * n110 / n;
  m.delta_125 = 100.0 * n125 / n;
  return m;
}

std::optional<NormalMetrics> normal_metrics(const NormalMap& pred,
                                            const NormalMap& gt,
                                            const TransparencyMask& eval_mask) {
  require_shape(pred.width, pred.height, gt.width, gt.height, "normal_metrics");
  require_shape(pred.width, pred.height, eval_mask.width, eval_mask.height,
                "normal_metrics mask");
  std::vector<double> angles;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!eval_mask[i]) continue;
    if (gt[i].squaredNorm() == 0.0 || pred[i].squaredNorm() == 0.0) continue;
    double c = std::clamp(pred[i].dot(gt[i]), -1.0, 1.0);
    angles.push_back(std::acos(c) * 180.0 / M_PI);
  }
  if (angles.empty()) return std::nullopt;
  const double n = static_cast<double>(angles.size());
  NormalMetrics m;
  double sum = 0.0;
  long c1125 = 0, c225 = 0, c30 = 0;
  for (double a : angles) {
    sum += a;
    if (a < 11.25) ++c1125;
    if (a < 22.5) ++c225;
    if (a < 30.0) ++c30;
  }
  m.mean_deg = sum / n;
  m.median_deg = lower_median(angles);
  m.pct_1125 = 100.0 * c1125 / n;
  m.pct_225 = 100.0 * c225 / n;
  m.pct_30 = 100.0 * c30 / n;
  return m;
}

MaskMetrics mask_metrics(const TransparencyMask& pred,
                         const TransparencyMask& gt) {
  require_shape(pred.width, pred.height, gt.width, gt.height, "mask_metrics");
  long inter = 0, uni = 0, gt_count = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    const bool p = pred[i] != 0, g = gt[i] != 0;
    if (p && g) ++inter;
    if (p || g) ++uni;
    if (g) ++gt_count;
  }
  MaskMetrics m;
  m.iou = uni > 0 ? static_cast<double>(inter) / uni : 1.0;
  m.tpr = gt_count > 0 ? 100.0 * inter / gt_count : 100.0;
  return m;
}

DepthMetrics average(const std::vector<DepthMetrics>& runs) {
  if (runs.empty()) throw ConfigError("average: no metrics to aggregate");
  DepthMetrics m;
  for (const auto& r : runs) {
    m.rmse += r.rmse;
    m.rel += r.rel;
    m.mae += r.mae;
    m.delta_105 += r.delta_105;
    m.delta_110 += r.delta_110;
    m.delta_125 += r.delta_125;
  }
  const double n = static_cast<double>(runs.size());
  m.rmse /= n;
  m.rel /= n;
  m.mae /= n;
  m.delta_105 /= n;
  m.delta_110 /= n;
  m.delta_125 /= n;
  return m;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

const DepthMetrics* find_label(const std::vector<AblationReport::Entry>& rows,
                               const std::string& label) {
  for (const auto& r : rows)
    if (r.label == label) return &r.metrics;
  return nullptr;
}

}  // namespace

AblationReport ablation_report(
    const std::vector<std::pair<std::string, DepthMetrics>>& runs) {
  if (runs.size() < 2)
    throw ConfigError("ablation_report: need at least two runs");
  AblationReport rep;
  for (const auto& [label, m] : runs)
    rep.rows.push_back({label, m, m.rmse - runs.front().second.rmse});
  std::stable_sort(rep.rows.begin(), rep.rows.end(),
                   [](const auto& a, const auto& b) {
                     return a.metrics.rmse < b.metrics.rmse;
                   });

  const DepthMetrics* full = find_label(rep.rows, "full");
  const DepthMetrics* no_mask = find_label(rep.rows, "no-mask");
  const DepthMetrics* no_edge = find_label(rep.rows, "no-edge-weights");
  if (full && no_mask)
    rep.checks.push_back(
        {"rmse(full) < rmse(no-mask)", full->rmse < no_mask->rmse});
  if (full && no_edge)
    rep.checks.push_back({"rmse(full) <= rmse(no-edge-weights)",
                          full->rmse <= no_edge->rmse});
  return rep;
}

std::string AblationReport::csv() const {
  std::ostringstream out;
  out << "label,rmse,rel,mae,d105,d110,d125,delta_rmse\n";
  for (const auto& r : rows) {
    const DepthMetrics& m = r.metrics;
    out << r.label << ',' << fmt(m.rmse) << ',' << fmt(m.rel) << ','
        << fmt(m.mae) << ',' << fmt(m.delta_105) << ',' << fmt(m.delta_110)
        << ',' << fmt(m.delta_125) << ',' << fmt(r.delta_rmse) << '\n';
  }
  for (const auto& c : checks)
    out << "# check: " << c.description << " -> "
        << (c.pass ? "pass" : "FAIL") << '\n';
  return out.str();
}

std::string AblationReport::table() const {
  auto best = rows.front().metrics;  // rmse-sorted, but star each column's best
  for (const auto& r : rows) {
    best.rel = std::min(best.rel, r.metrics.rel);
    best.mae = std::min(best.mae, r.metrics.mae);
    best.delta_105 = std::max(best.delta_105, r.metrics.delta_105);
    best.delta_110 = std::max(best.delta_110, r.metrics.delta_110);
    best.delta_125 = std::max(best.delta_125, r.metrics.delta_125);
  }
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %10s %10s %10s %8s %8s %8s\n",
                "mode", "rmse", "rel", "mae", "d1.05", "d1.10", "d1.25");
  out << line;
  auto cell = [](double v, bool star) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f%s", v, star ? "*" : " ");
    return std::string(buf);
  };
  for (const auto& r : rows) {
    const DepthMetrics& m = r.metrics;
    std::snprintf(line, sizeof line, "%-18s %10s %10s %10s %8s %8s %8s\n",
                  r.label.c_str(), cell(m.rmse, m.rmse == best.rmse).c_str(),
                  cell(m.rel, m.rel == best.rel).c_str(),
                  cell(m.mae, m.mae == best.mae).c_str(),
                  cell(m.delta_105, m.delta_105 == best.delta_105).c_str(),
                  cell(m.delta_110, m.delta_110 == best.delta_110).c_str(),
                  cell(m.delta_125, m.delta_125 == best.delta_125).c_str());
    out << line;
  }
  for (const auto& c : checks)
    out << (c.pass ? "[pass] " : "[FAIL] ") << c.description << '\n';
  return out.str();
}

}  // namespace glassdepth
