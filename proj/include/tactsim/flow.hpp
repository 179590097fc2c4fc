#pragma once

#include "tactsim/camera.hpp"
#include "tactsim/elastic.hpp"

namespace tactsim {

// Dense displacement field stored per pixel as (magnitude, angle) with the
// angle measured against the +x image axis and normalized to (-pi, pi].
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> magnitude_px;
    std::vector<float> angle_rad;

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width + x;
    }
};

// Coarse-to-fine inverse-search optical flow over an image pyramid (factor 2)
// with translation-only patch alignment and photometric-weighted
// densification. Throws InvariantError on an all-zero rest image.
FlowField compute_flow(const Image& rest, const Image& pressed, int levels = 4,
                       int patch_px = 8);

// Exact flow that bypasses imaging: each marker of the rest field is projected
// and annotated with its exact projected displacement; remaining pixels take
// the value of the nearest annotated pixel.
FlowField oracle_flow(const MarkerField& rest, const MarkerField& pressed,
                      const CameraModel& cam, const SensorConfig& cfg, int size);

}  // namespace tactsim
