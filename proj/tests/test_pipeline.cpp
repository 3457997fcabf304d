#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <glassdepth/io.hpp>
#include <glassdepth/pipeline.hpp>
#include <glassdepth/rng.hpp>
#include <map>
#include <sstream>

#ifndef _WIN32
#include <sys/wait.h>
#endif

using namespace glassdepth;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    const uint64_t tag = mix64(static_cast<uint64_t>(
        std::chrono::steady_clock::now().time_since_epoch().count()));
    path = fs::temp_directory_path() /
           ("glassdepth_pipe_" + std::to_string(tag));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path operator/(const std::string& s) const { return path / s; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Relative path -> file bytes for every regular file under root.
std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file())
      out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  return out;
}

// The resolved run_config.json legitimately differs between output
// directories (it records the output path), so tree comparisons skip it.
void check_trees_identical(const fs::path& a, const fs::path& b) {
  auto ta = tree_bytes(a), tb = tree_bytes(b);
  ta.erase("run_config.json");
  tb.erase("run_config.json");
  REQUIRE(ta.size() == tb.size());
  for (const auto& [name, bytes] : ta) {
    REQUIRE(tb.count(name) == 1);
    CHECK_MESSAGE(bytes == tb[name], name);
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

// CSV row of one scene as header-keyed fields.
std::map<std::string, std::string> csv_row(const fs::path& report,
                                           const std::string& scene_id) {
  std::istringstream in(slurp(report));
  std::string header, line;
  REQUIRE(std::getline(in, header));
  auto keys = split(header, ',');
  while (std::getline(in, line)) {
    auto vals = split(line, ',');
    if (!vals.empty() && vals[0] == scene_id) {
      std::map<std::string, std::string> row;
      for (size_t i = 0; i < keys.size() && i < vals.size(); ++i)
        row[keys[i]] = vals[i];
      return row;
    }
  }
  FAIL(("scene " + scene_id + " not found in " + report.string()));
  return {};
}

RunConfig generate_config(const fs::path& out, int count, uint64_t seed) {
  RunConfig cfg;
  cfg.subcommand = "generate";
  cfg.output = out.string();
  cfg.generate.count = count;
  cfg.generate.master_seed = seed;
  return cfg;
}

int run_cli(const std::string& args) {
  const char* exe = std::getenv("GLASSDEPTH_CLI");
  REQUIRE(exe != nullptr);
  const std::string cmd = std::string(exe) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
#ifndef _WIN32
  if (WIFEXITED(status)) return WEXITSTATUS(status);
#endif
  return status;
}

bool have_cli() { return std::getenv("GLASSDEPTH_CLI") != nullptr; }

}  // namespace

TEST_CASE("run config survives a json round trip") {
  RunConfig cfg;
  cfg.subcommand = "ablate";
  cfg.input = "in_dir";
  cfg.output = "out_dir";
  cfg.pred_dir = "p";
  cfg.gt_dir = "g";
  cfg.mask_dir = "m";
  cfg.report = "r.csv";
  cfg.also_full_image = true;
  cfg.generate.count = 3;
  cfg.generate.width = 128;
  cfg.generate.height = 96;
  cfg.generate.fx = 123.0;
  cfg.generate.cy = 47.5;
  cfg.generate.min_objects = 2;
  cfg.generate.max_objects = 4;
  cfg.generate.master_seed = 77;
  cfg.generate.corruption.type1_hole_rate = 0.25;
  cfg.generate.corruption.type2_passthrough = false;
  cfg.generate.perturbation.normal_angle_sigma = 5.0;
  cfg.generate.perturbation.boundary_dilation = 2;
  cfg.completion.weights.lambda_d = 500.0;
  cfg.completion.solver.tolerance = 1e-8;
  cfg.completion.solver.max_iterations = 1234;
  cfg.completion.boundary_sigma = 1.5;
  cfg.completion.b_cut = 0.02;
  cfg.completion.use_mask = false;
  cfg.ablate_modes = {"full", "no-mask"};
  cfg.workspace_file = "ws.json";
  cfg.depth_file = "d.png";
  cfg.stack_count = 16;
  cfg.pred_depth = "pd.png";
  cfg.viz = true;
  cfg.jobs = 4;

  const std::string text = run_config_to_json(cfg);
  RunConfig back = run_config_from_json(text);
  CHECK(run_config_to_json(back) == text);
  CHECK(back.subcommand == "ablate");
  CHECK(back.generate.corruption.type1_hole_rate == 0.25);
  CHECK_FALSE(back.generate.corruption.type2_passthrough);
  CHECK(back.completion.solver.max_iterations == 1234);
  CHECK_FALSE(back.completion.use_mask);
  CHECK(back.ablate_modes == std::vector<std::string>{"full", "no-mask"});
  CHECK(back.jobs == 4);

  CHECK_THROWS_AS(run_config_from_json("{nope"), ConfigError);
  // Missing fields keep their defaults.
  RunConfig sparse = run_config_from_json("{\"subcommand\": \"eval\"}");
  CHECK(sparse.subcommand == "eval");
  CHECK(sparse.completion.weights.lambda_d == 1000.0);
  CHECK(sparse.jobs == 1);
}

TEST_CASE("scene sampling is deterministic and in range") {
  GenerateConfig cfg;
  cfg.master_seed = 99;
  SceneSpec a = sample_scene_spec(cfg, 4);
  SceneSpec b = sample_scene_spec(cfg, 4);
  CHECK(a.seed == b.seed);
  REQUIRE(a.primitives.size() == b.primitives.size());
  CHECK(scene_spec_to_json(a) == scene_spec_to_json(b));
  CHECK(a.seed != sample_scene_spec(cfg, 5).seed);

  GenerateConfig other = cfg;
  other.master_seed = 100;
  CHECK(scene_spec_to_json(sample_scene_spec(other, 4)) !=
        scene_spec_to_json(a));

  for (int i = 0; i < 12; ++i) {
    SceneSpec s = sample_scene_spec(cfg, i);
    CHECK_NOTHROW(s.validate());
    REQUIRE(s.primitives.size() >= 3);
    CHECK(s.support_plane == 0);
    CHECK_FALSE(s.primitives[0].transparent);
    CHECK_FALSE(s.primitives[1].transparent);
    const size_t objects = s.primitives.size() - 2;
    CHECK(objects >= 1);
    CHECK(objects <= 3);
    for (size_t k = 2; k < s.primitives.size(); ++k) {
      const Primitive& p = s.primitives[k];
      CHECK(p.transparent);
      const double z = p.kind == Primitive::Kind::kCylinder ? p.base.z()
                       : p.kind == Primitive::Kind::kSphere ? p.center.z()
                                                            : p.center.z();
      CHECK(z >= 1.05);
      CHECK(z <= 1.7);
    }
  }
}

TEST_CASE("generate writes identical batches for identical configs") {
  TempDir tmp;
  RunConfig a = generate_config(tmp / "a", 2, 11);
  RunConfig b = generate_config(tmp / "b", 2, 11);
  REQUIRE(run_pipeline(a) == 0);
  REQUIRE(run_pipeline(b) == 0);
  check_trees_identical(tmp / "a", tmp / "b");

  // The per-scene artifacts are all present.
  for (const char* f :
       {"manifest.json", "gt_depth.png", "raw_depth.png", "gt_normals.pfm",
        "gt_mask.png", "gt_boundary.png"})
    CHECK(fs::exists(tmp / "a" / "scene_0000" / f));
  CHECK(fs::exists(tmp / "a" / "run_config.json"));

  // A different master seed changes the rendered scenes.
  RunConfig c = generate_config(tmp / "c", 2, 12);
  REQUIRE(run_pipeline(c) == 0);
  CHECK(slurp(tmp / "a" / "scene_0000" / "gt_depth.png") !=
        slurp(tmp / "c" / "scene_0000" / "gt_depth.png"));
}

TEST_CASE("complete output does not depend on the job count") {
  TempDir tmp;
  REQUIRE(run_pipeline(generate_config(tmp / "gen", 3, 21)) == 0);

  RunConfig c1;
  c1.subcommand = "complete";
  c1.input = (tmp / "gen").string();
  c1.output = (tmp / "seq").string();
  c1.jobs = 1;
  RunConfig c2 = c1;
  c2.output = (tmp / "par").string();
  c2.jobs = 2;
  REQUIRE(run_pipeline(c1) == 0);
  REQUIRE(run_pipeline(c2) == 0);
  check_trees_identical(tmp / "seq", tmp / "par");

  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04d", i);
    CHECK(fs::exists(tmp / "seq" / name / "completed_depth.png"));
    CHECK(fs::exists(tmp / "seq" / name / "diagnostics.json"));
  }
}

TEST_CASE("uncorrupted scene completed without mask removal stays put") {
  TempDir tmp;
  RunConfig gen = generate_config(tmp / "gen", 1, 31);
  gen.generate.corruption.type2_passthrough = false;  // raw == gt
  REQUIRE(run_pipeline(gen) == 0);

  RunConfig comp;
  comp.subcommand = "complete";
  comp.input = (tmp / "gen").string();
  comp.output = (tmp / "out").string();
  comp.completion.use_mask = false;
  REQUIRE(run_pipeline(comp) == 0);

  RunConfig ev;
  ev.subcommand = "eval";
  ev.pred_dir = (tmp / "out").string();
  ev.gt_dir = (tmp / "gen").string();
  ev.report = (tmp / "report.csv").string();
  REQUIRE(run_pipeline(ev) == 0);

  auto row = csv_row(tmp / "report.csv", "scene_0000");
  // Every input pixel is already correct, so the only error left is the
  // millimeter quantization of the stored prediction.
  CHECK(std::stod(row.at("rmse")) < 1e-3);
  CHECK(std::stod(row.at("d125")) == 100.0);
  // Unperturbed inputs score perfectly, up to the float32 storage of the
  // normal maps.
  CHECK(std::stod(row.at("n_mean")) < 0.05);
  CHECK(std::stod(row.at("iou")) == 1.0);
  CHECK(std::stod(row.at("tpr")) == 100.0);
}

TEST_CASE("eval writes the protocol header and full-image variant") {
  TempDir tmp;
  REQUIRE(run_pipeline(generate_config(tmp / "gen", 1, 41)) == 0);
  RunConfig comp;
  comp.subcommand = "complete";
  comp.input = (tmp / "gen").string();
  comp.output = (tmp / "out").string();
  REQUIRE(run_pipeline(comp) == 0);

  RunConfig ev;
  ev.subcommand = "eval";
  ev.pred_dir = (tmp / "out").string();
  ev.gt_dir = (tmp / "gen").string();
  ev.report = (tmp / "report.csv").string();
  ev.also_full_image = true;
  REQUIRE(run_pipeline(ev) == 0);

  const std::string text = slurp(tmp / "report.csv");
  CHECK(text.rfind("scene_id,rmse,rel,mae,d105,d110,d125,n_mean,n_median,"
                   "n_1125,n_225,n_30,iou,tpr\n",
                   0) == 0);
  CHECK(fs::exists(tmp / "report.full.csv"));
  auto masked = csv_row(tmp / "report.csv", "scene_0000");
  auto full = csv_row(tmp / "report.full.csv", "scene_0000");
  // The full-image run scores far more (mostly already-correct) pixels.
  CHECK(std::stod(full.at("rmse")) <= std::stod(masked.at("rmse")));
}

TEST_CASE("pipeline maps error categories to exit codes") {
  TempDir tmp;
  RunConfig bad;
  bad.subcommand = "frobnicate";
  CHECK(run_pipeline(bad) == 2);

  RunConfig no_out;
  no_out.subcommand = "generate";
  CHECK(run_pipeline(no_out) == 2);

  RunConfig missing;
  missing.subcommand = "complete";
  missing.input = (tmp / "does_not_exist").string();
  missing.output = (tmp / "x").string();
  CHECK(run_pipeline(missing) == 3);

  REQUIRE(run_pipeline(generate_config(tmp / "gen", 1, 51)) == 0);
  RunConfig ev;
  ev.subcommand = "eval";
  ev.gt_dir = (tmp / "gen").string();
  ev.pred_dir = (tmp / "nopred").string();
  ev.report = (tmp / "r.csv").string();
  CHECK(run_pipeline(ev) == 3);

  RunConfig bad_weights;
  bad_weights.subcommand = "complete";
  bad_weights.input = (tmp / "gen").string();
  bad_weights.output = (tmp / "y").string();
  bad_weights.completion.weights.lambda_d = -1.0;
  CHECK(run_pipeline(bad_weights) == 2);
}

TEST_CASE("ablate runs every mode and reports the comparison") {
  TempDir tmp;
  REQUIRE(run_pipeline(generate_config(tmp / "gen", 2, 61)) == 0);

  RunConfig abl;
  abl.subcommand = "ablate";
  abl.input = (tmp / "gen").string();
  abl.output = (tmp / "abl").string();
  REQUIRE(run_pipeline(abl) == 0);

  for (const char* mode : {"full", "no-mask", "no-edge-weights"}) {
    CHECK(fs::exists(tmp / "abl" / mode / "report.csv"));
    CHECK(fs::exists(tmp / "abl" / mode / "scene_0001" / "completed_depth.png"));
  }
  const std::string csv = slurp(tmp / "abl" / "ablation.csv");
  CHECK(csv.rfind("label,rmse,rel,mae,d105,d110,d125,delta_rmse\n", 0) == 0);
  CHECK(csv.find("full,") != std::string::npos);
  // Keeping background depth under the glass is far worse than removing it.
  CHECK(csv.find("# check: rmse(full) < rmse(no-mask) -> pass") !=
        std::string::npos);

  RunConfig one_mode = abl;
  one_mode.output = (tmp / "abl2").string();
  one_mode.ablate_modes = {"full"};
  CHECK(run_pipeline(one_mode) == 2);
}

TEST_CASE("heightmap subcommand grids a scene and stacks rotations") {
  TempDir tmp;
  REQUIRE(run_pipeline(generate_config(tmp / "gen", 1, 71)) == 0);

  // World frame with z up: table plane y=0.35 maps to height -0.35.
  std::ofstream ws(tmp / "ws.json");
  ws << "{\n"
        "  \"min\": [-0.5, 0.5, -0.4],\n"
        "  \"max\": [0.5, 1.9, 0.1],\n"
        "  \"resolution\": 0.01,\n"
        "  \"cam_to_world\": {\n"
        "    \"rotation\": [1, 0, 0, 0, 0, 1, 0, -1, 0],\n"
        "    \"translation\": [0, 0, 0]\n"
        "  }\n"
        "}\n";
  ws.close();

  RunConfig hm;
  hm.subcommand = "heightmap";
  hm.input = (tmp / "gen" / "scene_0000").string();
  hm.workspace_file = (tmp / "ws.json").string();
  hm.output = (tmp / "hm").string();
  hm.stack_count = 4;
  REQUIRE(run_pipeline(hm) == 0);

  CHECK(fs::exists(tmp / "hm" / "heightmap.pfm"));
  CHECK(fs::exists(tmp / "hm" / "heightmap_valid.png"));
  for (const char* f : {"rot_00.pfm", "rot_01.pfm", "rot_02.pfm", "rot_03.pfm"})
    CHECK(fs::exists(tmp / "hm" / "stack" / f));
  // Stack element zero is the unrotated heightmap, byte for byte.
  CHECK(slurp(tmp / "hm" / "stack" / "rot_00.pfm") ==
        slurp(tmp / "hm" / "heightmap.pfm"));
  CHECK(slurp(tmp / "hm" / "stack" / "rot_00_valid.png") ==
        slurp(tmp / "hm" / "heightmap_valid.png"));

  RunConfig no_ws = hm;
  no_ws.workspace_file = "";
  CHECK(run_pipeline(no_ws) == 2);
}

TEST_CASE("visualize renders inspection panels") {
  TempDir tmp;
  REQUIRE(run_pipeline(generate_config(tmp / "gen", 1, 81)) == 0);
  RunConfig viz;
  viz.subcommand = "visualize";
  viz.input = (tmp / "gen" / "scene_0000").string();
  viz.output = (tmp / "panels").string();
  REQUIRE(run_pipeline(viz) == 0);

  CHECK(fs::exists(tmp / "panels" / "gt_normals_rgb.png"));
  CHECK(fs::exists(tmp / "panels" / "gt_boundary_overlay.png"));
  int viz_pngs = 0;
  for (const auto& e : fs::directory_iterator(tmp / "panels"))
    if (e.path().extension() == ".png") ++viz_pngs;
  CHECK(viz_pngs >= 4);
}

TEST_CASE("command line drives the full pipeline") {
  if (!have_cli()) {
    MESSAGE("GLASSDEPTH_CLI not set; skipping CLI coverage");
    return;
  }
  TempDir tmp;
  const std::string gen_dir = (tmp / "gen").string();
  const std::string out_dir = (tmp / "out").string();
  const std::string report = (tmp / "report.csv").string();

  CHECK(run_cli("generate --output " + gen_dir + " --count 1 --seed 7") == 0);
  CHECK(fs::exists(tmp / "gen" / "scene_0000" / "manifest.json"));

  CHECK(run_cli("complete --input " + gen_dir + " --output " + out_dir) == 0);
  CHECK(fs::exists(tmp / "out" / "scene_0000" / "completed_depth.png"));

  CHECK(run_cli("eval --pred-dir " + out_dir + " --gt-dir " + gen_dir +
                " --report " + report) == 0);
  const std::string text = slurp(tmp / "report.csv");
  CHECK(text.rfind("scene_id,rmse,", 0) == 0);
  CHECK(text.find("scene_0000,") != std::string::npos);

  SUBCASE("argument errors exit with 2") {
    CHECK(run_cli("") == 2);                         // missing subcommand
    CHECK(run_cli("defragment --output x") == 2);    // unknown subcommand
    CHECK(run_cli("complete --frobnicate") == 2);    // unknown flag
    CHECK(run_cli("--config /no/such/file.json complete") == 3);
  }

  SUBCASE("missing inputs exit with 3") {
    CHECK(run_cli("complete --input " + (tmp / "void").string() +
                  " --output " + (tmp / "x").string()) == 3);
  }

  SUBCASE("flags override the config file") {
    std::ofstream cfg(tmp / "cfg.json");
    cfg << "{\"subcommand\": \"generate\", \"generate\": {\"count\": 9}}\n";
    cfg.close();
    const std::string g2 = (tmp / "g2").string();
    CHECK(run_cli("--config " + (tmp / "cfg.json").string() +
                  " generate --output " + g2 + " --count 1 --seed 3") == 0);
    CHECK(fs::exists(tmp / "g2" / "scene_0000"));
    CHECK_FALSE(fs::exists(tmp / "g2" / "scene_0001"));
    // And without the override the config file's count applies.
    RunConfig stored = run_config_from_json(slurp(tmp / "g2" / "run_config.json"));
    CHECK(stored.generate.count == 1);
    CHECK(stored.generate.master_seed == 3);
  }

  SUBCASE("help exits cleanly") { CHECK(run_cli("--help") == 0); }
}