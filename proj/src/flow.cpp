#include "tactsim/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "tactsim/common.hpp"
#include "tactsim/distance_transform.hpp"

namespace tactsim {

namespace {

constexpr int kStridePx = 4;
constexpr int kMaxIterations = 16;
constexpr double kConvergencePx = 0.01;
constexpr double kWeightEps = 1e-4;

float sample_bilinear(const Image& im, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(im.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(im.height - 1));
    const int x0 = std::min(static_cast<int>(x), im.width - 2 >= 0 ? im.width - 2 : 0);
    const int y0 = std::min(static_cast<int>(y), im.height - 2 >= 0 ? im.height - 2 : 0);
    const int x1 = std::min(x0 + 1, im.width - 1);
    const int y1 = std::min(y0 + 1, im.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double v00 = im.at(x0, y0);
    const double v10 = im.at(x1, y0);
    const double v01 = im.at(x0, y1);
    const double v11 = im.at(x1, y1);
    return static_cast<float>((v00 * (1 - fx) + v10 * fx) * (1 - fy) +
                              (v01 * (1 - fx) + v11 * fx) * fy);
}

Image downsample2(const Image& im) {
    Image out;
    out.width = im.width / 2;
    out.height = im.height / 2;
    out.px.assign(static_cast<std::size_t>(out.width) * out.height, 0.0f);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const double s = im.at(2 * x, 2 * y) + im.at(2 * x + 1, 2 * y) +
                             im.at(2 * x, 2 * y + 1) + im.at(2 * x + 1, 2 * y + 1);
            out.px[static_cast<std::size_t>(y) * out.width + x] = static_cast<float>(s / 4.0);
        }
    }
    return out;
}

struct Gradients {
    std::vector<float> gx;
    std::vector<float> gy;
};

Gradients image_gradients(const Image& im) {
    Gradients g;
    const std::size_t total = static_cast<std::size_t>(im.width) * im.height;
    g.gx.resize(total);
    g.gy.resize(total);
    for (int y = 0; y < im.height; ++y) {
        for (int x = 0; x < im.width; ++x) {
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, im.width - 1);
            const int ym = std::max(y - 1, 0), yp = std::min(y + 1, im.height - 1);
            const std::size_t i = static_cast<std::size_t>(y) * im.width + x;
            g.gx[i] = (im.at(xp, y) - im.at(xm, y)) / static_cast<float>(xp - xm);
            g.gy[i] = (im.at(x, yp) - im.at(x, ym)) / static_cast<float>(yp - ym);
        }
    }
    return g;
}

// Per-pixel flow at one pyramid level, stored as separate x/y components.
struct LevelFlow {
    int width = 0;
    int height = 0;
    std::vector<float> ux;
    std::vector<float> uy;
};

double patch_ssd(const Image& rest, const Image& pressed, int x0, int y0, int p,
                 double ux, double uy) {
    double ssd = 0.0;
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < p; ++i) {
            const double d = sample_bilinear(pressed, x0 + i + ux, y0 + j + uy) -
                             rest.at(x0 + i, y0 + j);
            ssd += d * d;
        }
    }
    return ssd;
}

// Inverse-compositional translation-only alignment of one patch. Returns
// false when the template Hessian is singular (untextured patch).
bool align_patch(const Image& rest, const Image& pressed, const Gradients& grad,
                 int x0, int y0, int p, double& ux, double& uy) {
    double hxx = 0.0, hxy = 0.0, hyy = 0.0;
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < p; ++i) {
            const std::size_t idx =
                static_cast<std::size_t>(y0 + j) * rest.width + (x0 + i);
            const double gx = grad.gx[idx];
            const double gy = grad.gy[idx];
            hxx += gx * gx;
            hxy += gx * gy;
            hyy += gy * gy;
        }
    }
    const double det = hxx * hyy - hxy * hxy;
    if (det < 1e-12) return false;
    const double ux0 = ux, uy0 = uy;
    for (int it = 0; it < kMaxIterations; ++it) {
        double bx = 0.0, by = 0.0;
        for (int j = 0; j < p; ++j) {
            for (int i = 0; i < p; ++i) {
                const std::size_t idx =
                    static_cast<std::size_t>(y0 + j) * rest.width + (x0 + i);
                const double e = sample_bilinear(pressed, x0 + i + ux, y0 + j + uy) -
                                 rest.at(x0 + i, y0 + j);
                bx += grad.gx[idx] * e;
                by += grad.gy[idx] * e;
            }
        }
        const double dx = (hyy * bx - hxy * by) / det;
        const double dy = (hxx * by - hxy * bx) / det;
        ux -= dx;
        uy -= dy;
        // Divergence guard: a patch drifting further than its own size from
        // the initial estimate is lost; keep the initialization instead.
        if (std::fabs(ux - ux0) > p || std::fabs(uy - uy0) > p) {
            ux = ux0;
            uy = uy0;
            break;
        }
        if (dx * dx + dy * dy < kConvergencePx * kConvergencePx) break;
    }
    return true;
}

std::vector<int> patch_origins(int extent, int patch, int stride) {
    std::vector<int> v;
    for (int x = 0; x + patch <= extent; x += stride) v.push_back(x);
    if (v.empty() || v.back() != extent - patch) v.push_back(extent - patch);
    return v;
}

LevelFlow solve_level(const Image& rest, const Image& pressed, const LevelFlow* coarser,
                      int patch) {
    const int w = rest.width, h = rest.height;
    const std::size_t total = static_cast<std::size_t>(w) * h;
    LevelFlow init;
    init.width = w;
    init.height = h;
    init.ux.assign(total, 0.0f);
    init.uy.assign(total, 0.0f);
    if (coarser != nullptr) {
        // Upsample the coarser flow (nearest neighbour, values doubled).
        for (int y = 0; y < h; ++y) {
            const int cy = std::min(y / 2, coarser->height - 1);
            for (int x = 0; x < w; ++x) {
                const int cx = std::min(x / 2, coarser->width - 1);
                const std::size_t ci =
                    static_cast<std::size_t>(cy) * coarser->width + cx;
                init.ux[static_cast<std::size_t>(y) * w + x] = 2.0f * coarser->ux[ci];
                init.uy[static_cast<std::size_t>(y) * w + x] = 2.0f * coarser->uy[ci];
            }
        }
    }

    const Gradients grad = image_gradients(rest);
    std::vector<double> acc_ux(total, 0.0), acc_uy(total, 0.0), acc_w(total, 0.0);
    const std::vector<int> xs = patch_origins(w, patch, kStridePx);
    const std::vector<int> ys = patch_origins(h, patch, kStridePx);
    for (int y0 : ys) {
        for (int x0 : xs) {
            const std::size_t center =
                static_cast<std::size_t>(y0 + patch / 2) * w + (x0 + patch / 2);
            // Candidate starts: inherited estimate and zero; prefer the lower
            // matching cost, break ties toward the smaller displacement.
            double ux = init.ux[center], uy = init.uy[center];
            if (ux != 0.0 || uy != 0.0) {
                const double ssd_init = patch_ssd(rest, pressed, x0, y0, patch, ux, uy);
                const double ssd_zero = patch_ssd(rest, pressed, x0, y0, patch, 0.0, 0.0);
                if (ssd_zero < ssd_init ||
                    (ssd_zero == ssd_init && ux * ux + uy * uy > 0.0)) {
                    ux = 0.0;
                    uy = 0.0;
                }
            }
            if (!align_patch(rest, pressed, grad, x0, y0, patch, ux, uy)) continue;
            // Patches whose warped window leaves the frame have no pressed
            // content to match; leave their pixels to the nearest-valid fill.
            if (x0 + ux < 0.0 || y0 + uy < 0.0 || x0 + ux + patch - 1 > w - 1 ||
                y0 + uy + patch - 1 > h - 1) {
                continue;
            }
            for (int j = 0; j < patch; ++j) {
                for (int i = 0; i < patch; ++i) {
                    const std::size_t idx =
                        static_cast<std::size_t>(y0 + j) * w + (x0 + i);
                    const double e =
                        sample_bilinear(pressed, x0 + i + ux, y0 + j + uy) -
                        rest.at(x0 + i, y0 + j);
                    const double wgt = 1.0 / std::max(e * e, kWeightEps);
                    acc_ux[idx] += wgt * ux;
                    acc_uy[idx] += wgt * uy;
                    acc_w[idx] += wgt;
                }
            }
        }
    }

    LevelFlow out;
    out.width = w;
    out.height = h;
    out.ux.assign(total, 0.0f);
    out.uy.assign(total, 0.0f);
    std::vector<bool> valid(total, false);
    bool all_valid = true, any_valid = false;
    for (std::size_t i = 0; i < total; ++i) {
        if (acc_w[i] > 0.0) {
            out.ux[i] = static_cast<float>(acc_ux[i] / acc_w[i]);
            out.uy[i] = static_cast<float>(acc_uy[i] / acc_w[i]);
            valid[i] = true;
            any_valid = true;
        } else {
            all_valid = false;
        }
    }
    if (!any_valid) return init;  // nothing trackable at this level: keep init
    if (!all_valid) {
        const std::vector<std::int32_t> nearest = nearest_seed_map(w, h, valid);
        for (std::size_t i = 0; i < total; ++i) {
            if (!valid[i]) {
                out.ux[i] = out.ux[static_cast<std::size_t>(nearest[i])];
                out.uy[i] = out.uy[static_cast<std::size_t>(nearest[i])];
            }
        }
    }
    return out;
}

float normalize_angle(double a) {
    // atan2 yields [-pi, pi]; fold the closed lower end onto +pi. The fold is
    // applied after the float cast so stored angles are strictly above the
    // float -pi, which downstream code relies on (+pi shifts stay positive).
    float f = static_cast<float>(a);
    constexpr float pi_f = static_cast<float>(kPi);
    if (f <= -pi_f) f = pi_f;
    return f;
}

FlowField to_flow_field(const LevelFlow& lf) {
    FlowField f;
    f.width = lf.width;
    f.height = lf.height;
    const std::size_t total = static_cast<std::size_t>(lf.width) * lf.height;
    f.magnitude_px.resize(total);
    f.angle_rad.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        const double ux = lf.ux[i], uy = lf.uy[i];
        f.magnitude_px[i] = static_cast<float>(std::hypot(ux, uy));
        f.angle_rad[i] = normalize_angle(std::atan2(uy, ux));
    }
    return f;
}

}  // namespace

FlowField compute_flow(const Image& rest, const Image& pressed, int levels, int patch_px) {
    if (rest.width != pressed.width || rest.height != pressed.height) {
        throw InvariantError("compute_flow: image sizes differ");
    }
    if (rest.width <= 0 || rest.height <= 0) {
        throw InvariantError("compute_flow: empty image");
    }
    if (levels < 1) throw InvariantError("compute_flow: levels must be >= 1");
    if (patch_px < 4) throw InvariantError("compute_flow: patch must be >= 4 px");
    bool any = false;
    for (float v : rest.px) {
        if (v != 0.0f) {
            any = true;
            break;
        }
    }
    if (!any) throw InvariantError("no trackable pattern");

    // Build pyramids, clamping the level count so the coarsest level still
    // holds at least one patch.
    std::vector<Image> pr{rest}, pp{pressed};
    for (int l = 1; l < levels; ++l) {
        const Image& prev = pr.back();
        if (prev.width / 2 < patch_px || prev.height / 2 < patch_px) break;
        pr.push_back(downsample2(prev));
        pp.push_back(downsample2(pp.back()));
    }

    LevelFlow flow;
    bool have = false;
    for (int l = static_cast<int>(pr.size()) - 1; l >= 0; --l) {
        flow = solve_level(pr[l], pp[l], have ? &flow : nullptr, patch_px);
        have = true;
    }
    return to_flow_field(flow);
}

FlowField oracle_flow(const MarkerField& rest, const MarkerField& pressed,
                      const CameraModel& cam, const SensorConfig& cfg, int size) {
    if (rest.positions.size() != pressed.positions.size()) {
        throw InvariantError("oracle_flow: marker counts differ");
    }
    if (rest.positions.empty()) throw InvariantError("oracle_flow: empty marker field");
    if (size <= 0) throw InvariantError("oracle_flow: bad image size");

    const std::size_t total = static_cast<std::size_t>(size) * size;
    std::vector<bool> seed(total, false);
    std::vector<float> ux(total, 0.0f), uy(total, 0.0f);
    for (std::size_t i = 0; i < rest.positions.size(); ++i) {
        const Vec2 p0 = project(to_camera_frame(rest.positions[i], cfg), cam);
        const Vec2 p1 = project(to_camera_frame(pressed.positions[i], cfg), cam);
        const int px = static_cast<int>(std::floor(p0.x));
        const int py = static_cast<int>(std::floor(p0.y));
        if (px < 0 || px >= size || py < 0 || py >= size) continue;
        const std::size_t idx = static_cast<std::size_t>(py) * size + px;
        if (seed[idx]) continue;  // first marker on a pixel wins
        seed[idx] = true;
        ux[idx] = static_cast<float>(p1.x - p0.x);
        uy[idx] = static_cast<float>(p1.y - p0.y);
    }
    bool any = false;
    for (std::size_t i = 0; i < total; ++i) {
        if (seed[i]) {
            any = true;
            break;
        }
    }
    if (!any) throw InvariantError("oracle_flow: no marker projects into the image");

    const std::vector<std::int32_t> nearest = nearest_seed_map(size, size, seed);
    FlowField f;
    f.width = size;
    f.height = size;
    f.magnitude_px.resize(total);
    f.angle_rad.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t s = static_cast<std::size_t>(nearest[i]);
        const double vx = ux[s], vy = uy[s];
        f.magnitude_px[i] = static_cast<float>(std::hypot(vx, vy));
        f.angle_rad[i] = normalize_angle(std::atan2(vy, vx));
    }
    return f;
}

}  // namespace tactsim
