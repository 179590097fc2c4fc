#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tactsim/dataset.hpp"

namespace tactsim {

inline constexpr const char* kToolVersion = "0.1.0";

// Shared by every subcommand. `config_path` empty means built-in defaults;
// `out_path` is the primary artifact and anchors the run directory. A JSON
// run manifest (resolved config, seeds, paths, tool version, wall time) is
// written next to each primary output as <out>.manifest.json. Manifests are
// the only outputs that embed timing, so all other artifacts are bit-stable
// across reruns with the same arguments.
struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 1;
  bool seed_given = false;  // generate falls back to the config rng_seed
};

struct GenerateArgs {
  CommonArgs common;
  std::string backend = "oracle";
  double spacing_mm = 0.75;
  double margin_mm = 0.0;
  int gel_id = 0;
  bool perturbed = false;  // generate with the perturbed sensor/material pair
};

struct TrainArgs {
  CommonArgs common;
  std::string data_path;
  // Optional overrides of the pipeline config (negative = keep config value).
  double learning_rate = -1;
  double dropout_rate = -1;
  int batch_size = -1;
  int patience = -1;
  int max_epochs = -1;
};

struct EvalArgs {
  CommonArgs common;  // out_path optional: empty prints to stdout only
  std::string model_path;
  std::string data_path;
  std::string split = "all";  // all|train|val|test, reconstructed from --seed
  std::string per_sample_path;
  int heatmap_index = -1;  // emit true/pred heatmap SVG for this sample
};

struct CalibrateArgs {
  CommonArgs common;
  std::string model_path;
  std::string data_path;
  std::vector<int> sweep_sizes;  // empty: single calibration, out = model
  double learning_rate = -1;
  double dropout_rate = -1;
  int batch_size = -1;
  int patience = -1;
  int max_epochs = -1;
};

struct FlowCheckArgs {
  CommonArgs common;  // out_path optional
  int cases = 50;
  double max_shift_px = 8.0;
  int image_size_px = -1;  // override config image size
  int levels = 4;
  int patch_px = 8;
};

int run_generate(const GenerateArgs& args);
int run_train(const TrainArgs& args);
int run_eval(const EvalArgs& args);
int run_calibrate(const CalibrateArgs& args);
int run_flow_check(const FlowCheckArgs& args);

}  // namespace tactsim
