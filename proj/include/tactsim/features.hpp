#pragma once

#include <span>
#include <vector>

#include "tactsim/flow.hpp"

namespace tactsim {

// Angle reduced to (-pi, pi] with std::remainder, which is exact in IEEE
// arithmetic: angles that differ by an exact multiple of the double 2*pi
// reduce to bitwise-identical values.
double reduce_angle(double angle_rad);

// atan2 of summed sines and cosines of the reduced angles. Empty input and
// exact antipodal cancellation both have well-defined results ((0) and (pi)).
double circular_mean(std::span<const double> angles_rad);

// Region-averaged flow features of length 2m, laid out as
// [d_avg_0 .. d_avg_{m-1}, alpha_avg_0 .. alpha_avg_{m-1}] over a
// sqrt(m) x sqrt(m) row-major grid of equal-area image regions.
struct FeatureVector {
    std::vector<float> values;

    int m() const { return static_cast<int>(values.size() / 2); }
};

// Row-major region index of a pixel for an m-region grid over a size x size
// image. Throws on out-of-image pixels or invalid m.
int region_of(int px, int py, int m, int image_size);

// Per region: arithmetic mean of magnitudes and unweighted circular mean of
// angles. Empty regions yield (0, 0). Requires m to be a perfect square; if
// the image side is not divisible by sqrt(m), regions follow the balanced
// integer partition (cell widths differ by at most one pixel).
FeatureVector extract_features(const FlowField& flow, int m);

}  // namespace tactsim
