#pragma once

#include <span>
#include <vector>

#include "tactsim/common.hpp"
#include "tactsim/config.hpp"
#include "tactsim/rng.hpp"

namespace tactsim {

// Linear-elastic gel. Displacements are proportional to the applied force at
// fixed geometry; hardness_scale() is the proportionality prefactor.
struct GelMaterial {
  double youngs_modulus_kpa = 50.0;
  double poisson_ratio = 0.49;

  // Shear modulus in N/mm^2 (kPa = 1e-3 N/mm^2).
  double shear_modulus() const {
    return youngs_modulus_kpa * 1e-3 / (2.0 * (1.0 + poisson_ratio));
  }
  // mm of displacement per N, up to the dimensionless geometry factor.
  double hardness_scale() const { return 1.0 / (4.0 * kPi * shear_modulus()); }
};

// One press: contact point on the surface, indentation depth, normal force.
// Force is stored as a magnitude (display convention: negative toward the
// camera is applied only in reports).
struct IndentationEvent {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double depth_mm = 0.0;
  double force_n = 0.0;
};

// Random marker positions in the gel volume. Coordinates are gel-local:
// x,y in [0, side], z measured downward from the surface, 0 < z < thickness.
struct MarkerField {
  std::vector<Vec3> positions;
};

inline constexpr double kIndenterRadiusMm = 0.6;  // 1.2 mm tip diameter

MarkerField make_markers(const SensorConfig& cfg);

// Point-load half-space displacement at a marker. The singularity guard
// activates when the 3D distance rho from the contact point drops below the
// indenter radius: the evaluation point is moved radially out to rho = 0.6 mm
// (direction preserved; the exact contact point evaluates on-axis).
Vec3 displacement_at(const Vec3& marker, const IndentationEvent& load,
                     const GelMaterial& mat);

// Monotone Hertz-style power law F = max_force * (depth/2)^1.5; depth 2 mm
// maps to max_force. Material and indenter radius are part of the interface
// for forward compatibility; the default law does not depend on them.
double depth_to_force(double depth_mm, const GelMaterial& mat,
                      double indenter_radius_mm = kIndenterRadiusMm,
                      double max_force_n = 1.0);

// Superposition of per-event displacements applied to every marker.
MarkerField displace_field(const MarkerField& field,
                           std::span<const IndentationEvent> events,
                           const GelMaterial& mat);

}  // namespace tactsim
