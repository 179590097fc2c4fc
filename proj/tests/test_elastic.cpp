#include <cmath>

#include "doctest.h"
#include "tactsim/elastic.hpp"

using namespace tactsim;

namespace {

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300});
}

}  // namespace

TEST_SUITE("elastic") {
  TEST_CASE("material helpers: shear modulus and displacement prefactor") {
    GelMaterial mat;  // E = 50 kPa, nu = 0.49
    CHECK(mat.shear_modulus() == doctest::Approx(0.05 / 2.98).epsilon(1e-15));
    CHECK(mat.hardness_scale() ==
          doctest::Approx(1.0 / (4.0 * kPi * 0.05 / 2.98)).epsilon(1e-15));
    // Displacements scale as 1/E at fixed nu.
    GelMaterial stiff = mat;
    stiff.youngs_modulus_kpa *= 1.3;
    CHECK(mat.hardness_scale() / stiff.hardness_scale() == doctest::Approx(1.3));
  }

  TEST_CASE("point-load displacement matches the frozen quadrature reference") {
    // Independent Hankel-quadrature evaluation at r = 1, z = 1 for a 1 N load
    // on the default material, frozen to full double precision.
    GelMaterial mat;
    IndentationEvent load{0.0, 0.0, 0.0, 1.0};
    const Vec3 u = displacement_at({1.0, 0.0, 1.0}, load, mat);
    CHECK(rel_err(u.x, 1.6490563583135448) < 1e-12);
    CHECK(u.y == 0.0);
    CHECK(rel_err(u.z, 5.0975909820815346) < 1e-12);
    CHECK(rel_err(std::hypot(u.x, u.y, u.z), 5.3576879988940486) < 1e-12);

    // The same offset along y moves the displacement to the y component.
    const Vec3 uy = displacement_at({0.0, 1.0, 1.0}, load, mat);
    CHECK(uy.x == 0.0);
    CHECK(uy.y == u.x);
    CHECK(uy.z == u.z);
  }

  TEST_CASE("displacement is linear in the applied force") {
    GelMaterial mat;
    const Vec3 marker{3.2, -1.1, 2.0};
    const IndentationEvent base{1.0, 0.5, 0.0, 0.37};
    const Vec3 u1 = displacement_at(marker, base, mat);

    IndentationEvent doubled = base;
    doubled.force_n = 2.0 * base.force_n;
    const Vec3 u2 = displacement_at(marker, doubled, mat);
    CHECK(u2.x == 2.0 * u1.x);  // exact: the force enters one multiplication
    CHECK(u2.y == 2.0 * u1.y);
    CHECK(u2.z == 2.0 * u1.z);

    IndentationEvent scaled = base;
    scaled.force_n = 1.7 * base.force_n;
    const Vec3 u17 = displacement_at(marker, scaled, mat);
    CHECK(rel_err(u17.x, 1.7 * u1.x) < 1e-12);
    CHECK(rel_err(u17.y, 1.7 * u1.y) < 1e-12);
    CHECK(rel_err(u17.z, 1.7 * u1.z) < 1e-12);
  }

  TEST_CASE("mirror symmetry about the load axis") {
    GelMaterial mat;
    // Offsets that are exact in binary, so the mirrored horizontal distances
    // are bitwise negations of each other.
    const IndentationEvent load{2.0, 3.0, 0.0, 0.8};
    const Vec3 a = displacement_at({2.0 + 1.25, 3.0 + 0.5, 1.1}, load, mat);
    const Vec3 b = displacement_at({2.0 - 1.25, 3.0 + 0.5, 1.1}, load, mat);
    CHECK(a.x == -b.x);
    CHECK(a.y == b.y);
    CHECK(a.z == b.z);
  }

  TEST_CASE("on-axis markers move straight down") {
    GelMaterial mat;
    const Vec3 u = displacement_at({5.0, 5.0, 1.0}, {5.0, 5.0, 0.0, 1.0}, mat);
    CHECK(u.x == 0.0);
    CHECK(u.y == 0.0);
    CHECK(u.z > 0.0);
  }

  TEST_CASE("singularity guard clamps to the indenter radius sphere") {
    GelMaterial mat;
    const IndentationEvent load{0.0, 0.0, 0.0, 1.0};
    // A marker well inside the clamp radius evaluates at the radially scaled
    // point on the rho = 0.6 sphere (same direction).
    const Vec3 inside = displacement_at({0.06, 0.0, 0.08}, load, mat);
    const double s = kIndenterRadiusMm / std::hypot(0.06, 0.08);
    const Vec3 at_sphere = displacement_at({0.06 * s, 0.0, 0.08 * s}, load, mat);
    CHECK(rel_err(inside.x, at_sphere.x) < 1e-12);
    CHECK(rel_err(inside.z, at_sphere.z) < 1e-12);
    CHECK(std::isfinite(inside.x));
    CHECK(std::isfinite(inside.z));

    // Clamped displacements never exceed the sphere-boundary magnitude scale.
    const Vec3 tiny = displacement_at({1e-9, 0.0, 1e-9}, load, mat);
    CHECK(std::isfinite(tiny.z));
    CHECK(std::hypot(tiny.x, tiny.y, tiny.z) <
          2.0 * mat.hardness_scale() * load.force_n / kIndenterRadiusMm * 3.0);
  }

  TEST_CASE("input validation") {
    GelMaterial mat;
    CHECK(displacement_at({1, 1, 1}, {0, 0, 0, 0.0}, mat).z == 0.0);  // no force
    CHECK_THROWS_AS(displacement_at({1, 1, 1}, {0, 0, 0, -1.0}, mat), InvariantError);
    CHECK_THROWS_AS(displacement_at({1, 1, 0.0}, {0, 0, 0, 1.0}, mat), InvariantError);
    CHECK_THROWS_AS(depth_to_force(-0.1, mat), InvariantError);
  }

  TEST_CASE("depth-to-force law hits the pinned values") {
    GelMaterial mat;
    CHECK(depth_to_force(2.0, mat) == 1.0);  // full depth maps to max force
    CHECK(depth_to_force(0.0, mat) == 0.0);
    CHECK(depth_to_force(0.25, mat) ==
          doctest::Approx(0.044194173824159216).epsilon(1e-12));
    CHECK(depth_to_force(1.0, mat) == doctest::Approx(0.35355339059327373).epsilon(1e-12));
    CHECK(depth_to_force(1.0, mat, kIndenterRadiusMm, 2.0) ==
          doctest::Approx(0.70710678118654746).epsilon(1e-12));
    // Monotone in depth.
    double prev = -1.0;
    for (double d = 0.0; d <= 2.0; d += 0.125) {
      const double f = depth_to_force(d, mat);
      CHECK(f > prev);
      prev = f;
    }
  }

  TEST_CASE("marker generation is deterministic and in bounds") {
    SensorConfig cfg;
    cfg.marker_count = 500;
    const MarkerField a = make_markers(cfg);
    const MarkerField b = make_markers(cfg);
    REQUIRE(a.positions.size() == 500);
    REQUIRE(b.positions.size() == 500);
    for (std::size_t i = 0; i < a.positions.size(); ++i) {
      CHECK(a.positions[i].x == b.positions[i].x);
      CHECK(a.positions[i].y == b.positions[i].y);
      CHECK(a.positions[i].z == b.positions[i].z);
      CHECK(a.positions[i].x >= 0.0);
      CHECK(a.positions[i].x <= cfg.surface_side_mm);
      CHECK(a.positions[i].y >= 0.0);
      CHECK(a.positions[i].y <= cfg.surface_side_mm);
      CHECK(a.positions[i].z > 0.0);
      CHECK(a.positions[i].z <= cfg.gel_thickness_mm);
    }
    SensorConfig other = cfg;
    other.rng_seed = cfg.rng_seed + 1;
    const MarkerField c = make_markers(other);
    CHECK(c.positions[0].x != a.positions[0].x);
  }

  TEST_CASE("field displacement superposes per-event displacements") {
    GelMaterial mat;
    MarkerField field;
    field.positions = {{4.0, 4.0, 1.0}, {10.0, 6.0, 2.5}};
    const IndentationEvent e1{5.0, 5.0, 1.0, 0.5};
    const IndentationEvent e2{9.0, 7.0, 0.5, 0.2};
    const std::vector<IndentationEvent> events{e1, e2};
    const MarkerField out = displace_field(field, events, mat);
    for (std::size_t i = 0; i < field.positions.size(); ++i) {
      const Vec3 u1 = displacement_at(field.positions[i], e1, mat);
      const Vec3 u2 = displacement_at(field.positions[i], e2, mat);
      CHECK(out.positions[i].x == field.positions[i].x + (u1.x + u2.x));
      CHECK(out.positions[i].y == field.positions[i].y + (u1.y + u2.y));
      CHECK(out.positions[i].z == field.positions[i].z + (u1.z + u2.z));
    }
  }
}
