#include "tactsim/camera.hpp"

#include <algorithm>
#include <cmath>

#include "tactsim/io_util.hpp"

namespace tactsim {

void write_pgm(const std::string& path, const Image& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.px.size());
  for (float v : img.px) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0f))));
  }
  write_file(path, out);
}

CameraModel make_camera(const SensorConfig& cfg) {
  CameraModel cam;
  cam.focal_px = cfg.image_size_px * kFocalReferenceDistanceMm / cfg.surface_side_mm;
  cam.principal_point = {cfg.image_size_px / 2.0, cfg.image_size_px / 2.0};
  return cam;
}

Vec3 to_camera_frame(const Vec3& marker, const SensorConfig& cfg) {
  return {marker.x - cfg.surface_side_mm / 2.0,
          marker.y - cfg.surface_side_mm / 2.0,
          cfg.camera_distance_mm + (cfg.gel_thickness_mm - marker.z)};
}

Vec2 project(const Vec3& p, const CameraModel& cam) {
  if (p.z <= 0.0) throw InvariantError("project: point not in front of the camera");
  return {cam.principal_point.x + cam.focal_px * p.x / p.z,
          cam.principal_point.y + cam.focal_px * p.y / p.z};
}

Image render(const MarkerField& field, const CameraModel& cam,
             const SensorConfig& cfg, int* skipped_out) {
  if (field.positions.empty()) throw InvariantError("render: empty marker field");
  const int size = cfg.image_size_px;
  Image img(size, size);
  int skipped = 0;

  const int radius = 5;  // ~4 sigma footprint
  const double inv2s2 = 1.0 / (2.0 * kSplatSigmaPx * kSplatSigmaPx);

  for (const Vec3& marker : field.positions) {
    const Vec3 c = to_camera_frame(marker, cfg);
    if (c.z <= 0.0) {
      ++skipped;
      continue;
    }
    const Vec2 p = project(c, cam);
    if (p.x < -radius - 1 || p.x > size + radius || p.y < -radius - 1 ||
        p.y > size + radius) {
      ++skipped;
      continue;
    }
    const int x0 = static_cast<int>(std::floor(p.x)) - radius;
    const int y0 = static_cast<int>(std::floor(p.y)) - radius;
    const int x1 = x0 + 2 * radius + 1;
    const int y1 = y0 + 2 * radius + 1;

    // Sum over the full footprint so each marker deposits unit mass when
    // fully visible; edge markers keep only their in-frame share.
    double wsum = 0.0;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const double ddx = x + 0.5 - p.x;
        const double ddy = y + 0.5 - p.y;
        wsum += std::exp(-(ddx * ddx + ddy * ddy) * inv2s2);
      }
    }
    if (wsum <= 0.0) {
      ++skipped;
      continue;
    }
    for (int y = std::max(0, y0); y < std::min(size, y1); ++y) {
      for (int x = std::max(0, x0); x < std::min(size, x1); ++x) {
        const double ddx = x + 0.5 - p.x;
        const double ddy = y + 0.5 - p.y;
        img.at(x, y) += static_cast<float>(std::exp(-(ddx * ddx + ddy * ddy) * inv2s2) / wsum);
      }
    }
  }
  for (float& v : img.px) v = std::clamp(v, 0.0f, 1.0f);
  if (skipped_out) *skipped_out = skipped;
  return img;
}

}  // namespace tactsim
