#include "tactsim/distance_transform.hpp"

#include <cmath>
#include <limits>

#include "tactsim/common.hpp"

namespace tactsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared-distance lower envelope (Felzenszwalb-Huttenlocher) that also
// carries the index of the winning source cell.
void envelope_1d(const std::vector<double>& f, const std::vector<std::int32_t>& src,
                 std::vector<double>& d_out, std::vector<std::int32_t>& src_out,
                 std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        double s = 0.0;
        while (true) {
            const int p = v[k];
            if (f[p] == kInf) {
                // Degenerate leading parabola at infinity: replace it.
                --k;
                if (k < 0) break;
                continue;
            }
            s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
                (2.0 * (q - p));
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = (k == 0) ? -kInf : s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const int p = v[k];
        if (f[p] == kInf) {
            d_out[q] = kInf;
            src_out[q] = -1;
        } else {
            const double dq = static_cast<double>(q) - p;
            d_out[q] = dq * dq + f[p];
            src_out[q] = src[p];
        }
    }
}

}  // namespace

std::vector<std::int32_t> nearest_seed_map(int width, int height,
                                           const std::vector<bool>& is_seed) {
    if (width <= 0 || height <= 0 ||
        is_seed.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InvariantError("nearest_seed_map: bad grid dimensions");
    }
    bool any = false;
    for (bool s : is_seed) {
        if (s) {
            any = true;
            break;
        }
    }
    if (!any) throw InvariantError("nearest_seed_map: no seed pixels");

    const std::size_t total = static_cast<std::size_t>(width) * height;
    // Pass 1: per column, squared distance to nearest seed within the column
    // plus the row index of that seed.
    std::vector<double> col_d(total, kInf);
    std::vector<std::int32_t> col_src(total, -1);
    {
        const int n = height;
        std::vector<double> f(n), d(n);
        std::vector<std::int32_t> src(n), so(n);
        std::vector<int> v(n);
        std::vector<double> z(n + 1);
        for (int x = 0; x < width; ++x) {
            bool col_any = false;
            for (int y = 0; y < n; ++y) {
                const std::size_t idx = static_cast<std::size_t>(y) * width + x;
                if (is_seed[idx]) {
                    f[y] = 0.0;
                    col_any = true;
                } else {
                    f[y] = kInf;
                }
                src[y] = static_cast<std::int32_t>(idx);
            }
            if (!col_any) continue;  // column stays at infinity
            envelope_1d(f, src, d, so, v, z);
            for (int y = 0; y < n; ++y) {
                const std::size_t idx = static_cast<std::size_t>(y) * width + x;
                col_d[idx] = d[y];
                col_src[idx] = so[y];
            }
        }
    }
    // Pass 2: per row, lower envelope over columns seeded with pass-1 costs.
    std::vector<std::int32_t> out(total, -1);
    {
        const int n = width;
        std::vector<double> f(n), d(n);
        std::vector<std::int32_t> src(n), so(n);
        std::vector<int> v(n);
        std::vector<double> z(n + 1);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < n; ++x) {
                const std::size_t idx = static_cast<std::size_t>(y) * width + x;
                f[x] = col_d[idx];
                src[x] = col_src[idx];
            }
            envelope_1d(f, src, d, so, v, z);
            for (int x = 0; x < n; ++x) {
                out[static_cast<std::size_t>(y) * width + x] = so[x];
            }
        }
    }
    return out;
}

}  // namespace tactsim
