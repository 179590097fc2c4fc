#include "tactsim/features.hpp"

#include <cmath>
#include <cstdint>

#include "tactsim/common.hpp"

namespace tactsim {

namespace {

int grid_side(int m) {
    if (m < 1) throw InvariantError("m must be positive");
    const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
    if (g * g != m) throw InvariantError("m must be a perfect square");
    return g;
}

float fold_pi(double a) {
    // Fold after the float cast so stored angles are strictly above the float
    // -pi; downstream +pi conditioning shifts rely on staying non-negative.
    float f = static_cast<float>(a);
    constexpr float pi_f = static_cast<float>(kPi);
    if (f <= -pi_f) f = pi_f;
    return f;
}

}  // namespace

double reduce_angle(double angle_rad) {
    double r = std::remainder(angle_rad, 2.0 * kPi);
    if (r <= -kPi) r = kPi;
    return r;
}

double circular_mean(std::span<const double> angles_rad) {
    double s = 0.0, c = 0.0;
    for (double a : angles_rad) {
        const double r = reduce_angle(a);
        s += std::sin(r);
        c += std::cos(r);
    }
    if (angles_rad.empty()) return 0.0;
    double mean = std::atan2(s, c);
    if (mean <= -kPi) mean = kPi;
    return mean;
}

int region_of(int px, int py, int m, int image_size) {
    const int g = grid_side(m);
    if (image_size < g) throw InvariantError("image smaller than the region grid");
    if (px < 0 || py < 0 || px >= image_size || py >= image_size) {
        throw InvariantError("pixel outside the image");
    }
    return (py * g / image_size) * g + px * g / image_size;
}

FeatureVector extract_features(const FlowField& flow, int m) {
    const int g = grid_side(m);
    if (flow.width != flow.height || flow.width < g) {
        throw InvariantError("flow field incompatible with the region grid");
    }
    const int size = flow.width;

    std::vector<double> sum_mag(m, 0.0), sum_sin(m, 0.0), sum_cos(m, 0.0);
    std::vector<std::int64_t> count(m, 0);
    for (int py = 0; py < size; ++py) {
        const int row = py * g / size;
        for (int px = 0; px < size; ++px) {
            const int region = row * g + px * g / size;
            const std::size_t i = flow.index(px, py);
            sum_mag[region] += flow.magnitude_px[i];
            const double a = reduce_angle(flow.angle_rad[i]);
            sum_sin[region] += std::sin(a);
            sum_cos[region] += std::cos(a);
            ++count[region];
        }
    }

    FeatureVector out;
    out.values.assign(2 * static_cast<std::size_t>(m), 0.0f);
    for (int r = 0; r < m; ++r) {
        if (count[r] == 0) continue;  // empty region stays (0, 0)
        out.values[r] = static_cast<float>(sum_mag[r] / count[r]);
        out.values[m + r] = fold_pi(std::atan2(sum_sin[r], sum_cos[r]));
    }
    return out;
}

}  // namespace tactsim
