#pragma once

#include <vector>

#include "tactsim/common.hpp"
#include "tactsim/elastic.hpp"

namespace tactsim {

// Sparse per-bin normal-force target over a sqrt(n) x sqrt(n) row-major grid
// covering the sensor surface. Single-indenter data has at most one nonzero
// component, equal to the applied force.
struct LabelVector {
    std::vector<float> values;

    int n() const { return static_cast<int>(values.size()); }
};

// Forces below this threshold count as no contact and give a zero label.
inline constexpr double kContactForceThresholdN = 0.01;

// Row-major bin index of a surface point; boundary points go to the
// lower-index bin. Throws on out-of-surface points or non-square n.
int bin_of(const Vec2& point_mm, int n, double side_mm);

// Center of bin k in surface coordinates.
Vec2 bin_center(int k, int n, double side_mm);

LabelVector make_label(const IndentationEvent& event, int n, double side_mm);

}  // namespace tactsim
