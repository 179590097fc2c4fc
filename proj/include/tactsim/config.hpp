#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "tactsim/common.hpp"

namespace tactsim {

// Physical sensor description. Length unit is mm throughout.
struct SensorConfig {
  double surface_side_mm = 32.0;
  double gel_thickness_mm = 4.5;
  double black_layer_mm = 1.5;
  double stiff_layer_mm = 17.0;
  int marker_count = 3000;
  double marker_diameter_min_um = 150.0;  // recorded metadata; rendering uses a
  double marker_diameter_max_um = 180.0;  // fixed splat radius (see camera)
  double camera_distance_mm = 17.0;       // lens to gel base
  int image_size_px = 440;
  std::uint64_t rng_seed = 12345;
};

// Feature/label sizes and training hyperparameters.
struct PipelineConfig {
  int m = 1600;  // averaging regions (features are 2*m wide)
  int n = 81;    // surface bins (network output width)
  int batch_size = 200;
  double learning_rate = 0.001;
  int n_es = 50;  // early-stop patience, epochs
  double dropout_rate = 0.15;
  std::array<int, 3> hidden_sizes = {800, 400, 400};
  double validation_fraction = 0.1;
  double test_fraction = 0.2;
};

struct CalibrationConfig {
  int batch_size = 64;
  double learning_rate = 0.0001;
  int n_es = 200;
  double dropout_rate = 0.05;
  int calib_dataset_size = 800;
};

struct Config {
  SensorConfig sensor;
  PipelineConfig pipeline;
  CalibrationConfig calibration;
};

// Throw InvariantError naming the violated invariant.
void validate(const SensorConfig& c);
void validate(const PipelineConfig& c);
void validate(const CalibrationConfig& c);
inline void validate(const Config& c) {
  validate(c.sensor);
  validate(c.pipeline);
  validate(c.calibration);
}

// Flat `key = value` text with '#' comments. Omitted keys keep defaults.
// The TACTSIM_SEED environment variable overrides rng_seed when set.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

// Canonical serialization; parse(serialize(c)) == c.
std::string serialize_config(const Config& c);

// FNV-1a hash of the canonical serialization; dataset/model provenance.
std::uint64_t config_hash(const Config& c);

}  // namespace tactsim
