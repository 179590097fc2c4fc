#include "tactsim/elastic.hpp"

#include <cmath>

namespace tactsim {

MarkerField make_markers(const SensorConfig& cfg) {
  Rng rng(cfg.rng_seed);
  MarkerField field;
  field.positions.reserve(static_cast<std::size_t>(cfg.marker_count));
  for (int i = 0; i < cfg.marker_count; ++i) {
    const double x = rng.uniform(0.0, cfg.surface_side_mm);
    const double y = rng.uniform(0.0, cfg.surface_side_mm);
    double z = rng.uniform() * cfg.gel_thickness_mm;
    while (z <= 0.0) z = rng.uniform() * cfg.gel_thickness_mm;  // z strictly inside
    field.positions.push_back({x, y, z});
  }
  return field;
}

Vec3 displacement_at(const Vec3& marker, const IndentationEvent& load,
                     const GelMaterial& mat) {
  if (load.force_n == 0.0) return {0.0, 0.0, 0.0};
  if (load.force_n < 0.0) throw InvariantError("displacement_at: negative force");
  if (marker.z <= 0.0) throw InvariantError("displacement_at: marker not below surface");

  const double dx = marker.x - load.x_mm;
  const double dy = marker.y - load.y_mm;
  double r = std::hypot(dx, dy);
  double z = marker.z;
  double rho = std::hypot(r, z);

  if (rho < kIndenterRadiusMm) {
    if (rho == 0.0) {
      r = 0.0;
      z = kIndenterRadiusMm;
    } else {
      const double s = kIndenterRadiusMm / rho;
      r *= s;
      z *= s;
    }
    rho = kIndenterRadiusMm;
  }

  const double nu = mat.poisson_ratio;
  const double pref = load.force_n * mat.hardness_scale();
  const double rho3 = rho * rho * rho;
  const double ur = pref * (r * z / rho3 - (1.0 - 2.0 * nu) * r / (rho * (rho + z)));
  const double uz = pref * (2.0 * (1.0 - nu) / rho + z * z / rho3);

  if (r == 0.0) return {0.0, 0.0, uz};
  // Unit radial direction from the original horizontal offset. After the
  // singularity clamp r may differ from hypot(dx,dy); only the magnitude
  // changes, the direction is preserved.
  const double r0 = std::hypot(dx, dy);
  if (r0 == 0.0) return {0.0, 0.0, uz};
  return {ur * dx / r0, ur * dy / r0, uz};
}

double depth_to_force(double depth_mm, const GelMaterial& mat,
                      double indenter_radius_mm, double max_force_n) {
  (void)mat;
  (void)indenter_radius_mm;
  if (depth_mm < 0.0) throw InvariantError("depth_to_force: negative depth");
  return max_force_n * std::pow(depth_mm / 2.0, 1.5);
}

MarkerField displace_field(const MarkerField& field,
                           std::span<const IndentationEvent> events,
                           const GelMaterial& mat) {
  MarkerField out = field;
  for (Vec3& p : out.positions) {
    Vec3 u{0.0, 0.0, 0.0};
    for (const IndentationEvent& e : events) {
      const Vec3 d = displacement_at(p, e, mat);
      u.x += d.x;
      u.y += d.y;
      u.z += d.z;
    }
    p.x += u.x;
    p.y += u.y;
    p.z += u.z;
  }
  return out;
}

}  // namespace tactsim
