#include "glassdepth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <thread>

#include "glassdepth/heightmap.hpp"
#include "glassdepth/io.hpp"
#include "glassdepth/metrics.hpp"
#include "glassdepth/rng.hpp"
#include "glassdepth/viz.hpp"

namespace glassdepth {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config serialization

namespace {

json weights_to_json(const EnergyWeights& w) {
  return {{"lambda_d", w.lambda_d},
          {"lambda_s", w.lambda_s},
          {"lambda_n", w.lambda_n}};
}

json corruption_to_json(const CorruptionModel& m) {
  return {{"type1_hole_rate", m.type1_hole_rate},
          {"type1_blob_radius", m.type1_blob_radius},
          {"type2_passthrough", m.type2_passthrough},
          {"depth_noise_sigma", m.depth_noise_sigma},
          {"seed", m.seed}};
}

json perturbation_to_json(const PerturbationModel& m) {
  return {{"normal_angle_sigma", m.normal_angle_sigma},
          {"boundary_dropout", m.boundary_dropout},
          {"boundary_dilation", m.boundary_dilation},
          {"mask_fn_rate", m.mask_fn_rate},
          {"mask_fp_rate", m.mask_fp_rate},
          {"seed", m.seed}};
}

CorruptionModel corruption_from_json(const json& j, CorruptionModel base) {
  base.type1_hole_rate = j.value("type1_hole_rate", base.type1_hole_rate);
  base.type1_blob_radius = j.value("type1_blob_radius", base.type1_blob_radius);
  base.type2_passthrough = j.value("type2_passthrough", base.type2_passthrough);
  base.depth_noise_sigma = j.value("depth_noise_sigma", base.depth_noise_sigma);
  base.seed = j.value("seed", base.seed);
  return base;
}

PerturbationModel perturbation_from_json(const json& j,
                                         PerturbationModel base) {
  base.normal_angle_sigma = j.value("normal_angle_sigma", base.normal_angle_sigma);
  base.boundary_dropout = j.value("boundary_dropout", base.boundary_dropout);
  base.boundary_dilation = j.value("boundary_dilation", base.boundary_dilation);
  base.mask_fn_rate = j.value("mask_fn_rate", base.mask_fn_rate);
  base.mask_fp_rate = j.value("mask_fp_rate", base.mask_fp_rate);
  base.seed = j.value("seed", base.seed);
  return base;
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
  const GenerateConfig& g = cfg.generate;
  const CompletionConfig& c = cfg.completion;
  json j{
      {"subcommand", cfg.subcommand},
      {"input", cfg.input},
      {"output", cfg.output},
      {"pred_dir", cfg.pred_dir},
      {"gt_dir", cfg.gt_dir},
      {"mask_dir", cfg.mask_dir},
      {"report", cfg.report},
      {"also_full_image", cfg.also_full_image},
      {"generate",
       {{"count", g.count},
        {"width", g.width},
        {"height", g.height},
        {"fx", g.fx},
        {"fy", g.fy},
        {"cx", g.cx},
        {"cy", g.cy},
        {"z_max", g.z_max},
        {"min_objects", g.min_objects},
        {"max_objects", g.max_objects},
        {"master_seed", g.master_seed},
        {"corruption", corruption_to_json(g.corruption)},
        {"perturbation", perturbation_to_json(g.perturbation)}}},
      {"completion",
       {{"weights", weights_to_json(c.weights)},
        {"solver",
         {{"tolerance", c.solver.tolerance},
          {"max_iterations", c.solver.max_iterations}}},
        {"boundary_sigma", c.boundary_sigma},
        {"b_cut", c.b_cut},
        {"use_mask", c.use_mask},
        {"use_boundary_weighting", c.use_boundary_weighting}}},
      {"ablate_modes", cfg.ablate_modes},
      {"workspace_file", cfg.workspace_file},
      {"depth_file", cfg.depth_file},
      {"stack_count", cfg.stack_count},
      {"pred_depth", cfg.pred_depth},
      {"viz", cfg.viz},
      {"jobs", cfg.jobs},
  };
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse failed: ") + e.what());
  }
  RunConfig cfg;
  try {
    cfg.subcommand = j.value("subcommand", cfg.subcommand);
    cfg.input = j.value("input", cfg.input);
    cfg.output = j.value("output", cfg.output);
    cfg.pred_dir = j.value("pred_dir", cfg.pred_dir);
    cfg.gt_dir = j.value("gt_dir", cfg.gt_dir);
    cfg.mask_dir = j.value("mask_dir", cfg.mask_dir);
    cfg.report = j.value("report", cfg.report);
    cfg.also_full_image = j.value("also_full_image", cfg.also_full_image);
    if (j.contains("generate")) {
      const json& jg = j["generate"];
      GenerateConfig& g = cfg.generate;
      g.count = jg.value("count", g.count);
      g.width = jg.value("width", g.width);
      g.height = jg.value("height", g.height);
      g.fx = jg.value("fx", g.fx);
      g.fy = jg.value("fy", g.fy);
      g.cx = jg.value("cx", g.cx);
      g.cy = jg.value("cy", g.cy);
      g.z_max = jg.value("z_max", g.z_max);
      g.min_objects = jg.value("min_objects", g.min_objects);
      g.max_objects = jg.value("max_objects", g.max_objects);
      g.master_seed = jg.value("master_seed", g.master_seed);
      if (jg.contains("corruption"))
        g.corruption = corruption_from_json(jg["corruption"], g.corruption);
      if (jg.contains("perturbation"))
        g.perturbation =
            perturbation_from_json(jg["perturbation"], g.perturbation);
    }
    if (j.contains("completion")) {
      const json& jc = j["completion"];
      CompletionConfig& c = cfg.completion;
      if (jc.contains("weights")) {
        const json& jw = jc["weights"];
        c.weights.lambda_d = jw.value("lambda_d", c.weights.lambda_d);
        c.weights.lambda_s = jw.value("lambda_s", c.weights.lambda_s);
        c.weights.lambda_n = jw.value("lambda_n", c.weights.lambda_n);
      }
      if (jc.contains("solver")) {
        const json& js = jc["solver"];
        c.solver.tolerance = js.value("tolerance", c.solver.tolerance);
        c.solver.max_iterations =
            js.value("max_iterations", c.solver.max_iterations);
      }
      c.boundary_sigma = jc.value("boundary_sigma", c.boundary_sigma);
      c.b_cut = jc.value("b_cut", c.b_cut);
      c.use_mask = jc.value("use_mask", c.use_mask);
      c.use_boundary_weighting =
          jc.value("use_boundary_weighting", c.use_boundary_weighting);
    }
    if (j.contains("ablate_modes"))
      cfg.ablate_modes = j["ablate_modes"].get<std::vector<std::string>>();
    cfg.workspace_file = j.value("workspace_file", cfg.workspace_file);
    cfg.depth_file = j.value("depth_file", cfg.depth_file);
    cfg.stack_count = j.value("stack_count", cfg.stack_count);
    cfg.pred_depth = j.value("pred_depth", cfg.pred_depth);
    cfg.viz = j.value("viz", cfg.viz);
    cfg.jobs = j.value("jobs", cfg.jobs);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Scene sampling

SceneSpec sample_scene_spec(const GenerateConfig& cfg, int index) {
  cfg.validate();
  const uint64_t scene_seed =
      hash_combine(cfg.master_seed, static_cast<uint64_t>(index));
  Rng rng(hash_combine(scene_seed, 0x5ce9e));

  SceneSpec spec;
  spec.intrinsics = cfg.intrinsics();
  spec.seed = scene_seed;
  spec.z_max = cfg.z_max;

  // Support table below the optical axis and a back wall. The wall depth
  // caps how obliquely the table is seen: beyond ~2.1 m its per-pixel depth
  // slope would cross the occlusion-boundary threshold and the horizon band
  // would be mislabeled as a depth step. Object depths keep contact lines
  // inside the frame.
  const double table_y = 0.35;
  spec.primitives.push_back(
      Primitive::make_plane({0.0, table_y, 0.0}, {0.0, -1.0, 0.0}));
  spec.primitives.push_back(
      Primitive::make_plane({0.0, 0.0, 1.9}, {0.0, 0.0, -1.0}));
  spec.support_plane = 0;

  const int n_objects = rng.uniform_int(cfg.min_objects, cfg.max_objects);
  for (int k = 0; k < n_objects; ++k) {
    const double x = rng.uniform(-0.28, 0.28);
    const double z = rng.uniform(1.05, 1.7);
    switch (rng.uniform_int(0, 2)) {
      case 0: {
        const double r = rng.uniform(0.04, 0.09);
        spec.primitives.push_back(
            Primitive::make_sphere({x, table_y - r, z}, r, true));
        break;
      }
      case 1: {
        const Eigen::Vector3d he(rng.uniform(0.03, 0.07),
                                 rng.uniform(0.03, 0.07),
                                 rng.uniform(0.03, 0.07));
        const double yaw = rng.uniform(0.0, M_PI);
        const Eigen::Quaterniond q(
            Eigen::AngleAxisd(yaw, Eigen::Vector3d(0.0, -1.0, 0.0)));
        spec.primitives.push_back(
            Primitive::make_box({x, table_y - he.y(), z}, he, q, true));
        break;
      }
      default: {
        const double r = rng.uniform(0.03, 0.06);
        const double hgt = rng.uniform(0.08, 0.18);
        spec.primitives.push_back(Primitive::make_cylinder(
            {x, table_y, z}, {0.0, -1.0, 0.0}, r, hgt, true));
        break;
      }
    }
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Shared helpers

namespace {

void parallel_for(int count, int jobs,
                  const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Re-raises with a scene/file context prefix, preserving the category.
template <typename Fn>
void with_context(const std::string& ctx, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(ctx + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(ctx + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(ctx + ": " + e.what());
  }
}

std::vector<fs::path> list_scene_dirs(const fs::path& input) {
  if (fs::exists(input / "manifest.json")) return {input};
  if (!fs::is_directory(input))
    throw IoError(input.string() + ": not a scene or batch directory");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(input))
    if (e.is_directory() && fs::exists(e.path() / "manifest.json"))
      dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw IoError(input.string() + ": no scenes found");
  return dirs;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_resolved_config(const RunConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file(dir / "run_config.json", run_config_to_json(cfg));
}

std::string scene_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04d", index);
  return buf;
}

// ---------------------------------------------------------------------------
// generate

void do_generate(const RunConfig& cfg) {
  cfg.generate.validate();
  if (cfg.output.empty()) throw ConfigError("generate: output directory required");
  write_resolved_config(cfg, cfg.output);
  parallel_for(cfg.generate.count, cfg.jobs, [&](int i) {
    const std::string id = scene_name(i);
    with_context(id, [&] {
      SceneSpec spec = sample_scene_spec(cfg.generate, i);
      Scene scene = render_scene(spec);
      scene.id = id;
      CorruptionModel corr = cfg.generate.corruption;
      corr.seed = hash_combine(spec.seed, 0xC0DE);
      scene.raw_depth = corrupt_depth(scene, corr);
      PerturbationModel pert = cfg.generate.perturbation;
      pert.seed = hash_combine(spec.seed, 0xFEED);
      scene = perturb_inputs(scene, pert);
      save_scene(fs::path(cfg.output) / id, scene);
    });
  });
}

// ---------------------------------------------------------------------------
// complete

json diagnostics_to_json(const std::string& scene_id,
                         const SolveDiagnostics& diag) {
  json regions = json::array();
  for (const auto& r : diag.regions)
    regions.push_back({{"pixel_count", r.pixels.size()},
                       {"indeterminate", r.indeterminate}});
  // Wall time stays in memory so identical runs write identical bytes.
  return json{{"scene_id", scene_id},
              {"iterations", diag.iterations},
              {"converged", diag.converged},
              {"relative_residual", diag.relative_residual},
              {"energy",
               {{"total", diag.energy},
                {"data", diag.energy_data},
                {"smooth", diag.energy_smooth},
                {"normal", diag.energy_normal}}},
              {"indeterminate_regions", regions}};
}

std::string depth_range_name(const char* stem, const DepthImage& d) {
  double lo = 0.0, hi = 0.0;
  false_color_depth(d, &lo, &hi);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_%dmm_%dmm.png", stem,
                static_cast<int>(std::lround(lo * 1000.0)),
                static_cast<int>(std::lround(hi * 1000.0)));
  return buf;
}

void complete_one(const fs::path& scene_dir, const fs::path& out_dir,
                  const CompletionConfig& ccfg, bool viz_panels) {
  Scene scene = load_scene(scene_dir);
  const DepthImage& raw =
      scene.raw_depth.width > 0 ? scene.raw_depth : scene.gt_depth;
  if (raw.width == 0)
    throw IoError("scene has no depth raster");
  const NormalMap& normals = scene.input_normals.width > 0
                                 ? scene.input_normals
                                 : scene.gt_normals;
  const TransparencyMask& mask =
      scene.input_mask.width > 0 ? scene.input_mask : scene.gt_mask;
  const BoundaryMap& boundary = scene.input_boundary.width() > 0
                                    ? scene.input_boundary
                                    : scene.gt_boundary;
  auto [depth, diag] =
      complete_depth(raw, normals, boundary, mask, scene.intrinsics, ccfg);
  fs::create_directories(out_dir);
  write_depth_png(out_dir / "completed_depth.png", depth);
  write_text_file(out_dir / "diagnostics.json",
                  diagnostics_to_json(scene.id, diag).dump(2) + "\n");
  if (viz_panels) {
    write_png_rgb8(out_dir / depth_range_name("completed_depth_viz", depth),
                   false_color_depth(depth));
    if (scene.gt_depth.width > 0)
      write_png_rgb8(out_dir / "error_heatmap.png",
                     error_heatmap(depth, scene.gt_depth));
    write_png_rgb8(out_dir / "input_normals_rgb.png", normal_rgb(normals));
  }
}

void do_complete(const RunConfig& cfg) {
  if (cfg.input.empty()) throw ConfigError("complete: input directory required");
  if (cfg.output.empty()) throw ConfigError("complete: output directory required");
  const auto dirs = list_scene_dirs(cfg.input);
  write_resolved_config(cfg, cfg.output);
  parallel_for(static_cast<int>(dirs.size()), cfg.jobs, [&](int i) {
    with_context(dirs[i].string(), [&] {
      complete_one(dirs[i], fs::path(cfg.output) / dirs[i].filename(),
                   cfg.completion, cfg.viz);
    });
  });
}

// ---------------------------------------------------------------------------
// eval

struct EvalRow {
  std::string scene_id;
  std::optional<DepthMetrics> depth;
  std::optional<NormalMetrics> normals;
  std::optional<MaskMetrics> mask;
};

std::string csv_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string csv_line(const EvalRow& r) {
  std::ostringstream out;
  out << r.scene_id << ',';
  if (r.depth)
    out << csv_value(r.depth->rmse) << ',' << csv_value(r.depth->rel) << ','
        << csv_value(r.depth->mae) << ',' << csv_value(r.depth->delta_105)
        << ',' << csv_value(r.depth->delta_110) << ','
        << csv_value(r.depth->delta_125) << ',';
  else
    out << ",,,,,,";
  if (r.normals)
    out << csv_value(r.normals->mean_deg) << ','
        << csv_value(r.normals->median_deg) << ','
        << csv_value(r.normals->pct_1125) << ','
        << csv_value(r.normals->pct_225) << ','
        << csv_value(r.normals->pct_30) << ',';
  else
    out << ",,,,,";
  if (r.mask)
    out << csv_value(r.mask->iou) << ',' << csv_value(r.mask->tpr);
  else
    out << ',';
  out << '\n';
  return out.str();
}

constexpr const char* kCsvHeader =
    "scene_id,rmse,rel,mae,d105,d110,d125,n_mean,n_median,n_1125,n_225,n_30,"
    "iou,tpr\n";

// One scene's metrics. full_image switches the evaluation mask to the whole
// frame instead of the transparent region.
EvalRow eval_scene(const Scene& scene, const DepthImage& pred,
                   const TransparencyMask& eval_mask, bool full_image) {
  EvalRow row;
  row.scene_id = scene.id;

  DepthImage pred_r = eval_resize(pred, kEvalWidth, kEvalHeight);
  DepthImage gt_r = eval_resize(scene.gt_depth, kEvalWidth, kEvalHeight);
  TransparencyMask mask_r =
      full_image ? TransparencyMask(kEvalWidth, kEvalHeight, true)
                 : eval_resize(eval_mask, kEvalWidth, kEvalHeight);
  row.depth = depth_metrics(pred_r, gt_r, mask_r);

  if (scene.input_normals.width > 0 && scene.gt_normals.width > 0) {
    TransparencyMask nm_mask =
        full_image ? TransparencyMask(scene.gt_normals.width,
                                      scene.gt_normals.height, true)
                   : eval_mask;
    row.normals = normal_metrics(scene.input_normals, scene.gt_normals, nm_mask);
  }
  if (scene.input_mask.width > 0 && scene.gt_mask.width > 0)
    row.mask = mask_metrics(scene.input_mask, scene.gt_mask);
  return row;
}

void write_report(const fs::path& path, std::vector<EvalRow> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const EvalRow& a, const EvalRow& b) {
              return a.scene_id < b.scene_id;
            });
  std::ostringstream out;
  out << kCsvHeader;
  for (const auto& r : rows) out << csv_line(r);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path, out.str());
}

void do_eval(const RunConfig& cfg) {
  if (cfg.gt_dir.empty() || cfg.pred_dir.empty())
    throw ConfigError("eval: --gt-dir and --pred-dir are required");
  fs::path report = cfg.report.empty()
                        ? (cfg.output.empty()
                               ? fs::path("report.csv")
                               : fs::path(cfg.output) / "report.csv")
                        : fs::path(cfg.report);
  const auto dirs = list_scene_dirs(cfg.gt_dir);
  std::vector<EvalRow> rows(dirs.size()), full_rows(dirs.size());
  parallel_for(static_cast<int>(dirs.size()), cfg.jobs, [&](int i) {
    with_context(dirs[i].string(), [&] {
      Scene scene = load_scene(dirs[i]);
      DepthImage pred = read_depth_png(fs::path(cfg.pred_dir) /
                                       dirs[i].filename() /
                                       "completed_depth.png");
      require_shape(pred.width, pred.height, scene.gt_depth.width,
                    scene.gt_depth.height, "prediction");
      TransparencyMask eval_mask =
          cfg.mask_dir.empty()
              ? scene.gt_mask
              : read_mask_png(fs::path(cfg.mask_dir) / dirs[i].filename() /
                              "gt_mask.png");
      rows[i] = eval_scene(scene, pred, eval_mask, false);
      if (cfg.also_full_image)
        full_rows[i] = eval_scene(scene, pred, eval_mask, true);
    });
  });
  write_report(report, rows);
  if (cfg.also_full_image) {
    fs::path full = report;
    full.replace_extension(".full.csv");
    write_report(full, full_rows);
  }
  write_resolved_config(cfg, report.has_parent_path() ? report.parent_path()
                                                      : fs::path("."));
}

// ---------------------------------------------------------------------------
// ablate

CompletionConfig mode_config(const CompletionConfig& base,
                             const std::string& mode) {
  CompletionConfig c = base;
  if (mode == "full") return c;
  if (mode == "no-mask") {
    c.use_mask = false;
    return c;
  }
  if (mode == "no-edge-weights") {
    c.use_boundary_weighting = false;
    return c;
  }
  throw ConfigError("ablate: unknown mode '" + mode + "'");
}

void do_ablate(const RunConfig& cfg) {
  if (cfg.input.empty()) throw ConfigError("ablate: input directory required");
  if (cfg.output.empty()) throw ConfigError("ablate: output directory required");
  if (cfg.ablate_modes.size() < 2)
    throw ConfigError("ablate: need at least two modes");
  const auto dirs = list_scene_dirs(cfg.input);
  write_resolved_config(cfg, cfg.output);

  std::vector<std::pair<std::string, DepthMetrics>> aggregated;
  for (const auto& mode : cfg.ablate_modes) {
    const CompletionConfig ccfg = mode_config(cfg.completion, mode);
    const fs::path mode_dir = fs::path(cfg.output) / mode;
    std::vector<EvalRow> rows(dirs.size());
    parallel_for(static_cast<int>(dirs.size()), cfg.jobs, [&](int i) {
      with_context(mode + "/" + dirs[i].filename().string(), [&] {
        complete_one(dirs[i], mode_dir / dirs[i].filename(), ccfg, false);
        Scene scene = load_scene(dirs[i]);
        DepthImage pred = read_depth_png(mode_dir / dirs[i].filename() /
                                         "completed_depth.png");
        rows[i] = eval_scene(scene, pred, scene.gt_mask, false);
      });
    });
    write_report(mode_dir / "report.csv", rows);
    std::vector<DepthMetrics> per_scene;
    for (const auto& r : rows)
      if (r.depth) per_scene.push_back(*r.depth);
    if (per_scene.empty())
      throw NumericalError("ablate: no scene produced metrics for " + mode);
    aggregated.emplace_back(mode, average(per_scene));
  }

  AblationReport report = ablation_report(aggregated);
  write_text_file(fs::path(cfg.output) / "ablation.csv", report.csv());
  std::cout << report.table();
}

// ---------------------------------------------------------------------------
// heightmap

Workspace load_workspace(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  Workspace ws;
  try {
    auto vec3 = [](const json& a) {
      return Eigen::Vector3d(a.at(0).get<double>(), a.at(1).get<double>(),
                             a.at(2).get<double>());
    };
    ws.min_corner = vec3(j.at("min"));
    ws.max_corner = vec3(j.at("max"));
    ws.resolution = j.at("resolution").get<double>();
    if (j.contains("cam_to_world")) {
      const json& t = j["cam_to_world"];
      if (t.contains("rotation")) {
        const json& r = t["rotation"];
        for (int i = 0; i < 9; ++i)
          ws.cam_to_world.rotation(i / 3, i % 3) = r.at(i).get<double>();
      }
      if (t.contains("translation"))
        ws.cam_to_world.translation = vec3(t["translation"]);
    }
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ws.validate();
  return ws;
}

void write_heightmap(const fs::path& stem, const Heightmap& hm) {
  write_pfm(fs::path(stem.string() + ".pfm"), hm.height);
  Raster<uint8_t> valid(hm.valid.width, hm.valid.height);
  for (size_t i = 0; i < valid.size(); ++i) valid[i] = hm.valid[i] ? 255 : 0;
  write_png8(fs::path(stem.string() + "_valid.png"), valid);
}

void do_heightmap(const RunConfig& cfg) {
  if (cfg.input.empty()) throw ConfigError("heightmap: input scene required");
  if (cfg.workspace_file.empty())
    throw ConfigError("heightmap: workspace JSON required");
  if (cfg.output.empty()) throw ConfigError("heightmap: output directory required");
  Workspace ws = load_workspace(cfg.workspace_file);
  Scene scene = load_scene(cfg.input);
  DepthImage depth = cfg.depth_file.empty()
                         ? scene.gt_depth
                         : read_depth_png(cfg.depth_file);
  if (depth.width == 0) throw IoError("heightmap: no depth raster available");
  write_resolved_config(cfg, cfg.output);
  auto cloud = backproject_cloud(depth, scene.intrinsics, ws.cam_to_world);
  Heightmap hm = build_heightmap(cloud, ws);
  write_heightmap(fs::path(cfg.output) / "heightmap", hm);
  if (cfg.stack_count > 0) {
    const fs::path stack_dir = fs::path(cfg.output) / "stack";
    fs::create_directories(stack_dir);
    auto stack = rotation_stack(hm, cfg.stack_count);
    for (size_t k = 0; k < stack.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "rot_%02zu", k);
      write_heightmap(stack_dir / name, stack[k]);
    }
  }
}

// ---------------------------------------------------------------------------
// visualize

void do_visualize(const RunConfig& cfg) {
  if (cfg.input.empty()) throw ConfigError("visualize: input scene required");
  if (cfg.output.empty())
    throw ConfigError("visualize: output directory required");
  Scene scene = load_scene(cfg.input);
  const fs::path out = cfg.output;
  write_resolved_config(cfg, out);
  if (scene.gt_depth.width > 0)
    write_png_rgb8(out / depth_range_name("gt_depth_viz", scene.gt_depth),
                   false_color_depth(scene.gt_depth));
  if (scene.raw_depth.width > 0)
    write_png_rgb8(out / depth_range_name("raw_depth_viz", scene.raw_depth),
                   false_color_depth(scene.raw_depth));
  if (scene.gt_normals.width > 0)
    write_png_rgb8(out / "gt_normals_rgb.png", normal_rgb(scene.gt_normals));
  if (scene.input_normals.width > 0)
    write_png_rgb8(out / "input_normals_rgb.png",
                   normal_rgb(scene.input_normals));
  if (scene.gt_boundary.width() > 0)
    write_png_rgb8(out / "gt_boundary_overlay.png",
                   boundary_overlay(scene.gt_boundary));
  if (scene.input_boundary.width() > 0)
    write_png_rgb8(out / "input_boundary_overlay.png",
                   boundary_overlay(scene.input_boundary));
  if (!cfg.pred_depth.empty()) {
    DepthImage pred = read_depth_png(cfg.pred_depth);
    write_png_rgb8(out / depth_range_name("pred_depth_viz", pred),
                   false_color_depth(pred));
    if (scene.gt_depth.width > 0)
      write_png_rgb8(out / "error_heatmap.png",
                     error_heatmap(pred, scene.gt_depth));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

int run_pipeline(const RunConfig& cfg) {
  try {
    if (cfg.subcommand == "generate") do_generate(cfg);
    else if (cfg.subcommand == "complete") do_complete(cfg);
    else if (cfg.subcommand == "eval") do_eval(cfg);
    else if (cfg.subcommand == "ablate") do_ablate(cfg);
    else if (cfg.subcommand == "heightmap") do_heightmap(cfg);
    else if (cfg.subcommand == "visualize") do_visualize(cfg);
    else throw ConfigError("unknown subcommand '" + cfg.subcommand + "'");
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace glassdepth
