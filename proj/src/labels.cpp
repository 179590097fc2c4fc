#include "tactsim/labels.hpp"

#include <algorithm>
#include <cmath>

namespace tactsim {

namespace {

int grid_side(int n) {
    if (n < 1) throw InvariantError("n must be positive");
    const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (g * g != n) throw InvariantError("n must be a perfect square");
    return g;
}

// Index along one axis with the boundary tie-break to the lower cell:
// a point exactly on a cell edge belongs to the cell below it.
int axis_bin(double v, int g, double side) {
    if (v <= 0.0) return 0;
    const int k = static_cast<int>(std::ceil(v * g / side)) - 1;
    return std::clamp(k, 0, g - 1);
}

}  // namespace

int bin_of(const Vec2& point_mm, int n, double side_mm) {
    const int g = grid_side(n);
    if (side_mm <= 0.0) throw InvariantError("side_mm must be positive");
    if (point_mm.x < 0.0 || point_mm.y < 0.0 || point_mm.x > side_mm ||
        point_mm.y > side_mm) {
        throw InvariantError("point outside the sensor surface");
    }
    return axis_bin(point_mm.y, g, side_mm) * g + axis_bin(point_mm.x, g, side_mm);
}

Vec2 bin_center(int k, int n, double side_mm) {
    const int g = grid_side(n);
    if (side_mm <= 0.0) throw InvariantError("side_mm must be positive");
    if (k < 0 || k >= n) throw InvariantError("bin index out of range");
    const double pitch = side_mm / g;
    return {(k % g + 0.5) * pitch, (k / g + 0.5) * pitch};
}

LabelVector make_label(const IndentationEvent& event, int n, double side_mm) {
    LabelVector label;
    label.values.assign(static_cast<std::size_t>(grid_side(n)) * grid_side(n), 0.0f);
    if (event.force_n < kContactForceThresholdN) return label;  // no-contact frame
    const int k = bin_of({event.x_mm, event.y_mm}, n, side_mm);
    label.values[static_cast<std::size_t>(k)] = static_cast<float>(event.force_n);
    return label;
}

}  // namespace tactsim
