#pragma once

#include <string>
#include <vector>

#include "glassdepth/completion.hpp"
#include "glassdepth/synthgen.hpp"

namespace glassdepth {

// Batch recipe for `generate`. Object poses are sampled resting on a support
// plane in front of a back wall; every sampled object is transparent.
struct GenerateConfig {
  int count = 10;
  int width = 256, height = 144;
  double fx = 200.0, fy = 200.0;
  double cx = 128.0, cy = 72.0;
  double z_max = 10.0;
  int min_objects = 1, max_objects = 3;
  CorruptionModel corruption;      // per-scene seeds are derived internally
  PerturbationModel perturbation;  // idem
  uint64_t master_seed = 0;

  CameraIntrinsics intrinsics() const {
    return {fx, fy, cx, cy, width, height};
  }

  void validate() const {
    if (count < 0) throw ConfigError("generate: count must be >= 0");
    intrinsics().validate();
    if (min_objects < 1 || max_objects > 5 || min_objects > max_objects)
      throw ConfigError("generate: object count range must be within [1,5]");
    corruption.validate();
    perturbation.validate();
  }
};

// Resolved invocation of one subcommand. Serialized beside every output so
// a run can be reproduced from its artifacts alone.
struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string output;

  // eval
  std::string pred_dir, gt_dir, mask_dir, report;
  bool also_full_image = false;

  GenerateConfig generate;
  CompletionConfig completion;
  std::vector<std::string> ablate_modes = {"full", "no-mask",
                                           "no-edge-weights"};

  // heightmap
  std::string workspace_file;
  std::string depth_file;
  int stack_count = 0;

  // visualize
  std::string pred_depth;

  bool viz = false;
  int jobs = 1;
};

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

// Deterministic per-index scene recipe under the config's master seed.
SceneSpec sample_scene_spec(const GenerateConfig& cfg, int index);

// Executes one subcommand. Returns 0 on success; categorized errors map to
// exit codes 2 (config), 3 (I/O), 4 (numerical), printed on stderr.
int run_pipeline(const RunConfig& cfg);

}  // namespace glassdepth
