#include "tactsim/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string_view>

#include "tactsim/io_util.hpp"

namespace tactsim {

namespace {

bool is_perfect_square(long v) {
  if (v < 1) return false;
  const long r = std::lround(std::sqrt(static_cast<double>(v)));
  return r * r == v;
}

void check(bool ok, const char* msg) {
  if (!ok) throw InvariantError(msg);
}

double parse_double(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw UsageError("config parse error at line " + std::to_string(line) +
                     ": not a number: '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, int line) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw UsageError("config parse error at line " + std::to_string(line) +
                     ": not an integer: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, int line) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw UsageError("config parse error at line " + std::to_string(line) +
                     ": not an unsigned integer: '" + s + "'");
  return v;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate(const SensorConfig& c) {
  check(c.surface_side_mm > 0, "surface_side_mm must be positive");
  check(c.gel_thickness_mm > 0, "gel_thickness_mm must be positive");
  check(c.black_layer_mm > 0, "black_layer_mm must be positive");
  check(c.stiff_layer_mm > 0, "stiff_layer_mm must be positive");
  check(c.camera_distance_mm > 0, "camera_distance_mm must be positive");
  check(c.marker_count >= 1, "marker_count must be >= 1");
  check(c.image_size_px >= 32, "image_size_px must be >= 32");
  check(c.marker_diameter_min_um > 0 &&
            c.marker_diameter_min_um <= c.marker_diameter_max_um,
        "marker diameter range must satisfy 0 < min <= max");
}

void validate(const PipelineConfig& c) {
  check(is_perfect_square(c.m), "m must be a perfect square");
  check(is_perfect_square(c.n), "n must be a perfect square");
  check(c.batch_size >= 1, "batch_size must be >= 1");
  check(c.learning_rate > 0, "learning_rate must be positive");
  check(c.n_es >= 1, "n_es must be >= 1");
  check(c.dropout_rate >= 0 && c.dropout_rate < 1,
        "dropout_rate must be in [0, 1)");
  for (int h : c.hidden_sizes) check(h >= 1, "hidden sizes must be >= 1");
  check(c.validation_fraction > 0 && c.validation_fraction < 1,
        "validation_fraction must be in (0, 1)");
  check(c.test_fraction > 0 && c.test_fraction < 1,
        "test_fraction must be in (0, 1)");
  check(c.validation_fraction + c.test_fraction < 1,
        "validation_fraction + test_fraction must be < 1");
}

void validate(const CalibrationConfig& c) {
  check(c.batch_size >= 1, "calib_batch_size must be >= 1");
  check(c.learning_rate > 0, "calib_learning_rate must be positive");
  check(c.n_es >= 1, "calib_n_es must be >= 1");
  check(c.dropout_rate >= 0 && c.dropout_rate < 1,
        "calib_dropout_rate must be in [0, 1)");
  check(c.calib_dataset_size >= 1, "calib_dataset_size must be >= 1");
}

Config parse_config(const std::string& text) {
  Config c;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw(text.data() + pos,
                               (nl == std::string::npos ? text.size() : nl) - pos);
    pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
    ++line_no;

    std::string line(raw);
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config parse error at line " + std::to_string(line_no) +
                       ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw UsageError("config parse error at line " + std::to_string(line_no) +
                       ": empty key or value");

    if (key == "surface_side_mm") c.sensor.surface_side_mm = parse_double(val, line_no);
    else if (key == "gel_thickness_mm") c.sensor.gel_thickness_mm = parse_double(val, line_no);
    else if (key == "black_layer_mm") c.sensor.black_layer_mm = parse_double(val, line_no);
    else if (key == "stiff_layer_mm") c.sensor.stiff_layer_mm = parse_double(val, line_no);
    else if (key == "marker_count") c.sensor.marker_count = static_cast<int>(parse_int(val, line_no));
    else if (key == "marker_diameter_min_um") c.sensor.marker_diameter_min_um = parse_double(val, line_no);
    else if (key == "marker_diameter_max_um") c.sensor.marker_diameter_max_um = parse_double(val, line_no);
    else if (key == "camera_distance_mm") c.sensor.camera_distance_mm = parse_double(val, line_no);
    else if (key == "image_size_px") c.sensor.image_size_px = static_cast<int>(parse_int(val, line_no));
    else if (key == "rng_seed") c.sensor.rng_seed = parse_u64(val, line_no);
    else if (key == "m") c.pipeline.m = static_cast<int>(parse_int(val, line_no));
    else if (key == "n") c.pipeline.n = static_cast<int>(parse_int(val, line_no));
    else if (key == "batch_size") c.pipeline.batch_size = static_cast<int>(parse_int(val, line_no));
    else if (key == "learning_rate") c.pipeline.learning_rate = parse_double(val, line_no);
    else if (key == "n_es") c.pipeline.n_es = static_cast<int>(parse_int(val, line_no));
    else if (key == "dropout_rate" || key == "dropout") c.pipeline.dropout_rate = parse_double(val, line_no);
    else if (key == "hidden1") c.pipeline.hidden_sizes[0] = static_cast<int>(parse_int(val, line_no));
    else if (key == "hidden2") c.pipeline.hidden_sizes[1] = static_cast<int>(parse_int(val, line_no));
    else if (key == "hidden3") c.pipeline.hidden_sizes[2] = static_cast<int>(parse_int(val, line_no));
    else if (key == "validation_fraction") c.pipeline.validation_fraction = parse_double(val, line_no);
    else if (key == "test_fraction") c.pipeline.test_fraction = parse_double(val, line_no);
    else if (key == "calib_batch_size") c.calibration.batch_size = static_cast<int>(parse_int(val, line_no));
    else if (key == "calib_learning_rate") c.calibration.learning_rate = parse_double(val, line_no);
    else if (key == "calib_n_es") c.calibration.n_es = static_cast<int>(parse_int(val, line_no));
    else if (key == "calib_dropout_rate" || key == "calib_dropout") c.calibration.dropout_rate = parse_double(val, line_no);
    else if (key == "calib_dataset_size") c.calibration.calib_dataset_size = static_cast<int>(parse_int(val, line_no));
    else
      throw UsageError("config parse error at line " + std::to_string(line_no) +
                       ": unknown key '" + key + "'");
  }
  validate(c);
  return c;
}

Config load_config(const std::string& path) {
  Config c = parse_config(read_file(path));
  if (const char* env = std::getenv("TACTSIM_SEED")) {
    c.sensor.rng_seed = parse_u64(env, 0);
  }
  return c;
}

std::string serialize_config(const Config& c) {
  std::string out;
  auto kv = [&out](const char* k, const std::string& v) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  };
  auto kd = [&](const char* k, double v) { kv(k, format_double(v)); };
  auto ki = [&](const char* k, long long v) { kv(k, std::to_string(v)); };

  kd("surface_side_mm", c.sensor.surface_side_mm);
  kd("gel_thickness_mm", c.sensor.gel_thickness_mm);
  kd("black_layer_mm", c.sensor.black_layer_mm);
  kd("stiff_layer_mm", c.sensor.stiff_layer_mm);
  ki("marker_count", c.sensor.marker_count);
  kd("marker_diameter_min_um", c.sensor.marker_diameter_min_um);
  kd("marker_diameter_max_um", c.sensor.marker_diameter_max_um);
  kd("camera_distance_mm", c.sensor.camera_distance_mm);
  ki("image_size_px", c.sensor.image_size_px);
  kv("rng_seed", std::to_string(c.sensor.rng_seed));
  ki("m", c.pipeline.m);
  ki("n", c.pipeline.n);
  ki("batch_size", c.pipeline.batch_size);
  kd("learning_rate", c.pipeline.learning_rate);
  ki("n_es", c.pipeline.n_es);
  kd("dropout_rate", c.pipeline.dropout_rate);
  ki("hidden1", c.pipeline.hidden_sizes[0]);
  ki("hidden2", c.pipeline.hidden_sizes[1]);
  ki("hidden3", c.pipeline.hidden_sizes[2]);
  kd("validation_fraction", c.pipeline.validation_fraction);
  kd("test_fraction", c.pipeline.test_fraction);
  ki("calib_batch_size", c.calibration.batch_size);
  kd("calib_learning_rate", c.calibration.learning_rate);
  ki("calib_n_es", c.calibration.n_es);
  kd("calib_dropout_rate", c.calibration.dropout_rate);
  ki("calib_dataset_size", c.calibration.calib_dataset_size);
  return out;
}

std::uint64_t config_hash(const Config& c) { return fnv1a64(serialize_config(c)); }

}  // namespace tactsim
