#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "glassdepth/pipeline.hpp"

namespace {

using glassdepth::ConfigError;
using glassdepth::RunConfig;

// --config is applied before CLI11 parses so that explicit flags override
// the file. Only the path is extracted here; CLI11 still validates it.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" || a == "-c") {
      if (i + 1 < argc) return argv[i + 1];
      throw ConfigError("--config expects a path");
    }
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

RunConfig load_defaults(int argc, char** argv) {
  const std::string path = find_config_arg(argc, argv);
  if (path.empty()) return {};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw glassdepth::IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return glassdepth::run_config_from_json(ss.str());
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void add_completion_flags(CLI::App* sub, glassdepth::CompletionConfig& c,
                          CLI::Option** no_mask, CLI::Option** no_edges) {
  sub->add_option("--lambda-d", c.weights.lambda_d, "observed-depth weight");
  sub->add_option("--lambda-s", c.weights.lambda_s, "smoothness weight");
  sub->add_option("--lambda-n", c.weights.lambda_n, "normal-consistency weight");
  *no_mask = sub->add_flag("--no-mask", "keep raw depth under the mask");
  *no_edges =
      sub->add_flag("--no-edge-weights", "ignore occlusion down-weighting");
  sub->add_option("--boundary-sigma", c.boundary_sigma,
                  "Gaussian blur of occlusion probability (px)");
  sub->add_option("--b-cut", c.b_cut, "indeterminacy flood-fill threshold");
  sub->add_option("--tolerance", c.solver.tolerance,
                  "relative residual stopping tolerance");
  sub->add_option("--max-iters", c.solver.max_iterations,
                  "CG iteration cap (-1: 10x unknowns)");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  try {
    cfg = load_defaults(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  }

  CLI::App app{"depth completion for transparent objects"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config,-c", config_path, "JSON config; flags override it");
  app.add_option("--jobs,-j", cfg.jobs, "scenes processed in parallel");

  CLI::App* gen = app.add_subcommand("generate", "render a synthetic batch");
  gen->add_option("--output,-o", cfg.output, "batch directory");
  gen->add_option("--count", cfg.generate.count, "number of scenes");
  gen->add_option("--seed", cfg.generate.master_seed, "master seed");
  gen->add_option("--width", cfg.generate.width);
  gen->add_option("--height", cfg.generate.height);
  gen->add_option("--min-objects", cfg.generate.min_objects);
  gen->add_option("--max-objects", cfg.generate.max_objects);
  gen->add_option("--hole-rate", cfg.generate.corruption.type1_hole_rate,
                  "fraction of mask pixels punched out");
  gen->add_option("--blob-radius", cfg.generate.corruption.type1_blob_radius);
  gen->add_option("--noise-sigma", cfg.generate.corruption.depth_noise_sigma,
                  "depth noise on opaque pixels (m)");
  CLI::Option* no_passthrough = gen->add_flag(
      "--no-passthrough", "keep true depth under the transparency mask");
  gen->add_option("--normal-sigma",
                  cfg.generate.perturbation.normal_angle_sigma,
                  "normal perturbation (deg)");
  gen->add_option("--boundary-dropout",
                  cfg.generate.perturbation.boundary_dropout);
  gen->add_option("--boundary-dilation",
                  cfg.generate.perturbation.boundary_dilation);
  gen->add_option("--mask-fn", cfg.generate.perturbation.mask_fn_rate);
  gen->add_option("--mask-fp", cfg.generate.perturbation.mask_fp_rate);

  CLI::App* comp = app.add_subcommand("complete", "solve for dense depth");
  comp->add_option("--input,-i", cfg.input, "scene or batch directory");
  comp->add_option("--output,-o", cfg.output, "result directory");
  CLI::Option *comp_no_mask = nullptr, *comp_no_edges = nullptr;
  add_completion_flags(comp, cfg.completion, &comp_no_mask, &comp_no_edges);
  comp->add_flag("--viz", cfg.viz, "also write visualization panels");

  CLI::App* eval = app.add_subcommand("eval", "score predictions against gt");
  eval->add_option("--pred-dir", cfg.pred_dir, "completed results");
  eval->add_option("--gt-dir", cfg.gt_dir, "ground-truth scenes");
  eval->add_option("--mask-dir", cfg.mask_dir,
                   "evaluation masks (default: gt masks)");
  eval->add_option("--report", cfg.report, "CSV output path");
  eval->add_option("--output,-o", cfg.output, "directory for default report");
  eval->add_flag("--also-full-image", cfg.also_full_image,
                 "additionally score every valid pixel");

  CLI::App* abl = app.add_subcommand("ablate", "run solver variants");
  abl->add_option("--input,-i", cfg.input, "scene or batch directory");
  abl->add_option("--output,-o", cfg.output, "result directory");
  std::string modes;
  abl->add_option("--modes", modes, "comma-separated variant list");
  CLI::Option *abl_no_mask = nullptr, *abl_no_edges = nullptr;
  add_completion_flags(abl, cfg.completion, &abl_no_mask, &abl_no_edges);

  CLI::App* hm = app.add_subcommand("heightmap", "grid a depth map in world");
  hm->add_option("--input,-i", cfg.input, "scene directory (intrinsics)");
  hm->add_option("--output,-o", cfg.output, "result directory");
  hm->add_option("--workspace", cfg.workspace_file, "workspace JSON");
  hm->add_option("--depth", cfg.depth_file,
                 "depth PNG (default: scene ground truth)");
  hm->add_option("--stack", cfg.stack_count, "rotation stack size");

  CLI::App* viz = app.add_subcommand("visualize", "render inspection PNGs");
  viz->add_option("--input,-i", cfg.input, "scene directory");
  viz->add_option("--output,-o", cfg.output, "panel directory");
  viz->add_option("--pred", cfg.pred_depth, "completed depth to compare");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (CLI::App* sub : {gen, comp, eval, abl, hm, viz})
    if (app.got_subcommand(sub)) cfg.subcommand = sub->get_name();
  if (no_passthrough->count()) cfg.generate.corruption.type2_passthrough = false;
  if (comp_no_mask->count() || abl_no_mask->count())
    cfg.completion.use_mask = false;
  if (comp_no_edges->count() || abl_no_edges->count())
    cfg.completion.use_boundary_weighting = false;
  if (!modes.empty()) cfg.ablate_modes = split_csv(modes);
  if (cfg.output.empty())
    if (const char* root = std::getenv("GLASSDEPTH_OUTPUT_ROOT"))
      cfg.output = root;

  return glassdepth::run_pipeline(cfg);
}
