#pragma once

#include <string>
#include <vector>

#include "tactsim/common.hpp"
#include "tactsim/config.hpp"
#include "tactsim/elastic.hpp"

namespace tactsim {

// Single-channel float image, row-major, values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> px;

  Image() = default;
  Image(int w, int h) : width(w), height(h), px(static_cast<std::size_t>(w) * h, 0.0f) {}
  float& at(int x, int y) { return px[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x]; }
};

// Binary 8-bit PGM dump for inspection.
void write_pgm(const std::string& path, const Image& img);

struct CameraModel {
  double focal_px = 0.0;
  Vec2 principal_point;
};

// The focal length is fixed against a 17 mm reference distance so that the
// 32 mm surface fills the frame at the reference geometry. It intentionally
// does NOT track camera_distance_mm: moving the camera changes magnification,
// which is the perturbation the cross-sensor calibration experiment relies on.
inline constexpr double kFocalReferenceDistanceMm = 17.0;
inline constexpr double kSplatSigmaPx = 1.2;

CameraModel make_camera(const SensorConfig& cfg);

// Gel-local marker (x, y, z measured downward from the surface) to camera
// frame (lateral offsets from the optical axis, distance from the lens).
Vec3 to_camera_frame(const Vec3& marker, const SensorConfig& cfg);

// Pinhole projection of a camera-frame point; z must be positive.
// The radial offset from the principal point scales as 1/z.
Vec2 project(const Vec3& camera_point, const CameraModel& cam);

// Render every visible marker as an isotropic Gaussian splat (sigma = 1.2 px),
// sum-normalized per marker over its footprint. Deterministic. Markers whose
// splat lies fully outside the frame are skipped; the count is reported via
// skipped_out when non-null.
Image render(const MarkerField& field, const CameraModel& cam,
             const SensorConfig& cfg, int* skipped_out = nullptr);

}  // namespace tactsim
