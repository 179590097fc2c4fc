#include "tactsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tactsim/camera.hpp"
#include "tactsim/features.hpp"
#include "tactsim/flow.hpp"
#include "tactsim/io_util.hpp"
#include "tactsim/labels.hpp"
#include "tactsim/rng.hpp"

namespace tactsim {

namespace {

constexpr std::string_view kMagic = "TSIM";
constexpr std::uint32_t kVersion = 1;

std::uint64_t generation_hash(const SensorConfig& sensor, const PipelineConfig& pipe,
                              const GelMaterial& mat, const GenerateOptions& opt) {
    Config cfg;
    cfg.sensor = sensor;
    cfg.pipeline = pipe;
    std::string s = serialize_config(cfg);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "youngs_modulus_kpa=%.17g\npoisson_ratio=%.17g\nspacing=%.17g\n"
                  "margin=%.17g\nmax_force=%.17g\ngel_id=%d\nbackend=%s\n",
                  mat.youngs_modulus_kpa, mat.poisson_ratio, opt.grid_spacing_mm,
                  opt.edge_margin_mm, opt.max_force_n, opt.gel_id,
                  backend_name(opt.backend));
    s += buf;
    for (double d : opt.depths) {
        std::snprintf(buf, sizeof(buf), "depth=%.17g\n", d);
        s += buf;
    }
    return fnv1a64(s);
}

}  // namespace

const char* backend_name(FlowBackend backend) {
    return backend == FlowBackend::kOracle ? "oracle" : "rendered";
}

FlowBackend parse_backend(const std::string& name) {
    if (name == "oracle") return FlowBackend::kOracle;
    if (name == "rendered") return FlowBackend::kRendered;
    throw UsageError("unknown flow backend '" + name + "' (use oracle|rendered)");
}

std::vector<double> default_depths() {
    std::vector<double> d(8);
    for (int i = 0; i < 8; ++i) d[i] = 0.25 * (i + 1);
    return d;
}

std::vector<double> sweep_positions(double side_mm, double spacing_mm,
                                    double edge_margin_mm) {
    if (spacing_mm <= 0.0) throw InvariantError("grid spacing must be positive");
    if (edge_margin_mm < 0.0 || 2.0 * edge_margin_mm > side_mm) {
        throw InvariantError("edge margin outside the surface");
    }
    const double span = side_mm - 2.0 * edge_margin_mm;
    const int count = static_cast<int>(std::floor(span / spacing_mm + 1e-9)) + 1;
    std::vector<double> xs(count);
    for (int i = 0; i < count; ++i) xs[i] = edge_margin_mm + i * spacing_mm;
    return xs;
}

Dataset generate(const SensorConfig& sensor, const PipelineConfig& pipe,
                 const GelMaterial& mat, const GenerateOptions& opt) {
    validate(sensor);
    validate(pipe);
    for (double d : opt.depths) {
        if (d < 0.25 || d > 2.0) {
            throw InvariantError("indentation depth outside [0.25, 2.0] mm");
        }
    }
    if (opt.depths.empty()) throw InvariantError("no indentation depths given");

    const MarkerField rest = make_markers(sensor);
    const CameraModel cam = make_camera(sensor);
    Image rest_img;
    if (opt.backend == FlowBackend::kRendered) rest_img = render(rest, cam, sensor);

    const std::vector<double> xs =
        sweep_positions(sensor.surface_side_mm, opt.grid_spacing_mm, opt.edge_margin_mm);

    Dataset ds;
    ds.m = pipe.m;
    ds.n = pipe.n;
    ds.config_hash = generation_hash(sensor, pipe, mat, opt);
    ds.seed = sensor.rng_seed;
    ds.backend = opt.backend;
    ds.samples.reserve(xs.size() * xs.size() * opt.depths.size());

    for (double y : xs) {
        for (double x : xs) {
            for (double depth : opt.depths) {
                IndentationEvent ev;
                ev.x_mm = x;
                ev.y_mm = y;
                ev.depth_mm = depth;
                ev.force_n = depth_to_force(depth, mat, kIndenterRadiusMm, opt.max_force_n);

                const MarkerField pressed =
                    displace_field(rest, std::span<const IndentationEvent>(&ev, 1), mat);
                FlowField flow;
                if (opt.backend == FlowBackend::kOracle) {
                    flow = oracle_flow(rest, pressed, cam, sensor, sensor.image_size_px);
                } else {
                    const Image pressed_img = render(pressed, cam, sensor);
                    flow = compute_flow(rest_img, pressed_img);
                }
                const FeatureVector feat = extract_features(flow, pipe.m);
                const LabelVector label = make_label(ev, pipe.n, sensor.surface_side_mm);

                Sample s;
                s.x_mm = static_cast<float>(x);
                s.y_mm = static_cast<float>(y);
                s.depth_mm = static_cast<float>(depth);
                s.force_n = static_cast<float>(ev.force_n);
                s.gel_id = opt.gel_id;
                s.features = feat.values;
                s.label = label.values;
                ds.samples.push_back(std::move(s));
            }
        }
    }
    return ds;
}

Split split_indices(std::size_t count, double test_fraction, double val_fraction,
                    std::uint64_t seed) {
    if (count == 0) throw InvariantError("cannot split an empty dataset");
    if (test_fraction <= 0.0 || val_fraction <= 0.0 ||
        test_fraction + val_fraction >= 1.0) {
        throw InvariantError("split fractions must be in (0,1) and sum below 1");
    }
    const std::size_t n_test =
        static_cast<std::size_t>(std::llround(count * test_fraction));
    const std::size_t n_val =
        static_cast<std::size_t>(std::llround(count * val_fraction));
    if (n_test + n_val >= count) throw InvariantError("split leaves no training samples");

    Rng rng(seed);
    std::vector<std::uint32_t> perm = rng.permutation(static_cast<std::uint32_t>(count));
    Split sp;
    sp.test.assign(perm.begin(), perm.begin() + n_test);
    sp.val.assign(perm.begin() + n_test, perm.begin() + n_test + n_val);
    sp.train.assign(perm.begin() + n_test + n_val, perm.end());
    std::sort(sp.test.begin(), sp.test.end());
    std::sort(sp.val.begin(), sp.val.end());
    std::sort(sp.train.begin(), sp.train.end());
    return sp;
}

Dataset subset(const Dataset& ds, std::span<const std::uint32_t> indices) {
    Dataset out;
    out.m = ds.m;
    out.n = ds.n;
    out.config_hash = ds.config_hash;
    out.seed = ds.seed;
    out.backend = ds.backend;
    out.samples.reserve(indices.size());
    for (std::uint32_t i : indices) {
        if (i >= ds.samples.size()) throw InvariantError("subset index out of range");
        out.samples.push_back(ds.samples[i]);
    }
    return out;
}

void save_dataset(const std::string& path, const Dataset& ds) {
    ByteWriter w;
    w.put_magic(kMagic);
    w.put_u32(kVersion);
    w.put_i32(ds.m);
    w.put_i32(ds.n);
    w.put_u64(ds.samples.size());
    w.put_u64(ds.config_hash);
    w.put_u64(ds.seed);
    w.put_u8(static_cast<std::uint8_t>(ds.backend));
    for (const Sample& s : ds.samples) {
        if (s.features.size() != 2 * static_cast<std::size_t>(ds.m) ||
            s.label.size() != static_cast<std::size_t>(ds.n)) {
            throw InvariantError("sample shape differs from the dataset header");
        }
        w.put_f32(s.x_mm);
        w.put_f32(s.y_mm);
        w.put_f32(s.depth_mm);
        w.put_f32(s.force_n);
        w.put_i32(s.gel_id);
        for (float v : s.features) w.put_f32(v);
        for (float v : s.label) w.put_f32(v);
    }
    w.put_u32(crc32(w.bytes().data(), w.size()));
    write_file(path, w.bytes());

    std::string jsonl;
    jsonl.reserve(ds.samples.size() * 96);
    char line[256];
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const Sample& s = ds.samples[i];
        std::snprintf(line, sizeof(line),
                      "{\"i\":%zu,\"x_mm\":%.9g,\"y_mm\":%.9g,\"depth_mm\":%.9g,"
                      "\"force_n\":%.9g,\"gel_id\":%d}\n",
                      i, s.x_mm, s.y_mm, s.depth_mm, s.force_n, s.gel_id);
        jsonl += line;
    }
    write_file(path + ".jsonl", jsonl);
}

Dataset load_dataset(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 4 + 4) throw IoError(path + ": file too short");
    ByteReader r(std::string_view(bytes.data(), bytes.size() - 4));
    if (r.get_magic(4) != kMagic) throw IoError(path + ": not a dataset file");
    const std::uint32_t version = r.get_u32();
    if (version != kVersion) {
        throw IoError(path + ": unsupported dataset version " + std::to_string(version));
    }

    const std::uint32_t stored_crc =
        static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[bytes.size() - 4])) |
        static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[bytes.size() - 3])) << 8 |
        static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[bytes.size() - 2])) << 16 |
        static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[bytes.size() - 1])) << 24;
    const std::uint32_t actual_crc = crc32(bytes.data(), bytes.size() - 4);
    if (stored_crc != actual_crc) throw IoError(path + ": checksum mismatch");

    Dataset ds;
    ds.m = r.get_i32();
    ds.n = r.get_i32();
    if (ds.m <= 0 || ds.n <= 0) throw IoError(path + ": corrupt header");
    const std::uint64_t count = r.get_u64();
    ds.config_hash = r.get_u64();
    ds.seed = r.get_u64();
    const std::uint8_t backend = r.get_u8();
    if (backend > 1) throw IoError(path + ": corrupt flow backend tag");
    ds.backend = static_cast<FlowBackend>(backend);

    ds.samples.resize(count);
    for (Sample& s : ds.samples) {
        s.x_mm = r.get_f32();
        s.y_mm = r.get_f32();
        s.depth_mm = r.get_f32();
        s.force_n = r.get_f32();
        s.gel_id = r.get_i32();
        s.features.resize(2 * static_cast<std::size_t>(ds.m));
        for (float& v : s.features) v = r.get_f32();
        s.label.resize(static_cast<std::size_t>(ds.n));
        for (float& v : s.label) v = r.get_f32();
    }
    if (r.remaining() != 0) throw IoError(path + ": trailing bytes after the last sample");
    return ds;
}

void require_shape(const Dataset& ds, int m, int n) {
    if (ds.m != m || ds.n != n) {
        throw InvariantError("dataset shape mismatch: expected m=" + std::to_string(m) +
                             " n=" + std::to_string(n) + ", found m=" +
                             std::to_string(ds.m) + " n=" + std::to_string(ds.n));
    }
}

}  // namespace tactsim
