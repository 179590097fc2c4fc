#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tactsim/config.hpp"
#include "tactsim/elastic.hpp"

namespace tactsim {

enum class FlowBackend : std::uint8_t { kOracle = 0, kRendered = 1 };

const char* backend_name(FlowBackend backend);
FlowBackend parse_backend(const std::string& name);

// One (feature, label) pair plus the ground-truth contact metadata.
struct Sample {
    float x_mm = 0.0f;
    float y_mm = 0.0f;
    float depth_mm = 0.0f;
    float force_n = 0.0f;
    std::int32_t gel_id = 0;
    std::vector<float> features;  // length 2m
    std::vector<float> label;     // length n
};

struct Dataset {
    std::int32_t m = 0;
    std::int32_t n = 0;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    FlowBackend backend = FlowBackend::kOracle;
    std::vector<Sample> samples;
};

// Eight equally spaced indentation depths covering 0.25..2.0 mm.
std::vector<double> default_depths();

struct GenerateOptions {
    double grid_spacing_mm = 0.75;
    std::vector<double> depths = default_depths();
    FlowBackend backend = FlowBackend::kOracle;
    // Positions closer than this to the surface edge are skipped; 0 keeps the
    // full edge-inclusive grid. Set to the contact radius to drop presses
    // whose contact circle would cross the boundary.
    double edge_margin_mm = 0.0;
    double max_force_n = 1.0;
    std::int32_t gel_id = 0;
};

// Edge-inclusive sweep positions along one axis: margin, margin + spacing, ...
// up to side - margin.
std::vector<double> sweep_positions(double side_mm, double spacing_mm,
                                    double edge_margin_mm);

// Full position x depth sweep. One sample per (position, depth), ordered
// row-major by position then by depth. Deterministic for a fixed config.
Dataset generate(const SensorConfig& sensor, const PipelineConfig& pipe,
                 const GelMaterial& mat, const GenerateOptions& opt = {});

// Disjoint seeded split; fractions apply to the total count and sizes are
// rounded to the nearest integer (100 samples at 0.2/0.1 -> 70/10/20).
struct Split {
    std::vector<std::uint32_t> train;
    std::vector<std::uint32_t> val;
    std::vector<std::uint32_t> test;
};

Split split_indices(std::size_t count, double test_fraction, double val_fraction,
                    std::uint64_t seed);

Dataset subset(const Dataset& ds, std::span<const std::uint32_t> indices);

// Binary container with a CRC32 trailer plus a human-readable JSONL sidecar
// at path + ".jsonl" (one metadata line per sample).
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

// Shape guard for consumers; mentions expected and found sizes.
void require_shape(const Dataset& ds, int m, int n);

}  // namespace tactsim
