#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "tactsim/features.hpp"

using namespace tactsim;

TEST_SUITE("features") {
  TEST_CASE("reduce_angle lands in (-pi, pi] and is exactly 2pi-periodic") {
    CHECK(reduce_angle(0.0) == 0.0);
    CHECK(reduce_angle(kPi) == kPi);
    CHECK(reduce_angle(-kPi) == kPi);  // closed upper end, open lower end
    CHECK(reduce_angle(3.0 * kPi) == doctest::Approx(kPi).epsilon(1e-12));

    // std::remainder is exact in IEEE arithmetic, so any input and its own
    // reduction differ by an exact multiple of the double 2*pi and must
    // reduce to bitwise-identical angles.
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> wide(-1e8, 1e8);
    for (int i = 0; i < 2000; ++i) {
      const double a = wide(gen);
      const double r = std::remainder(a, 2.0 * kPi);
      CHECK(reduce_angle(a) == reduce_angle(r));
      CHECK(reduce_angle(a) > -kPi);
      CHECK(reduce_angle(a) <= kPi);
    }
  }

  TEST_CASE("circular mean: plain average for nearby angles") {
    const std::array<double, 2> a{0.1, 0.3};
    CHECK(circular_mean(a) == doctest::Approx(0.2).epsilon(1e-12));
    const std::array<double, 1> b{-2.0};
    CHECK(circular_mean(b) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(circular_mean(std::span<const double>{}) == 0.0);
  }

  TEST_CASE("circular mean wraps correctly around +-pi") {
    // Naive averaging of {+3, -3} gives 0; the circular mean stays near pi.
    const std::array<double, 2> a{3.0, -3.0};
    const double mean = circular_mean(a);
    CHECK(std::fabs(reduce_angle(mean - kPi)) < 1e-9);
  }

  TEST_CASE("antipodal pair {+3pi/4, -3pi/4} yields exactly pi") {
    // The sines cancel exactly (sin is odd, the inputs are bitwise negatives)
    // and the cosine sum is negative, so atan2(+0, c<0) returns +pi exactly.
    const std::array<double, 2> a{3.0 * kPi / 4.0, -(3.0 * kPi / 4.0)};
    CHECK(circular_mean(a) == kPi);
    CHECK(circular_mean(a) != 0.0);
  }

  TEST_CASE("circular mean is rotation-equivariant") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_int_distribution<int> count(1, 40);
    int tested = 0;
    while (tested < 300) {
      std::vector<double> a(static_cast<std::size_t>(count(gen)));
      for (double& v : a) v = ang(gen);
      // Skip near-degenerate sets whose resultant is too short for a stable
      // mean direction.
      double s = 0.0, c = 0.0;
      for (double v : a) {
        s += std::sin(v);
        c += std::cos(v);
      }
      if (std::hypot(s, c) < 0.01 * static_cast<double>(a.size())) continue;

      const double delta = ang(gen);
      std::vector<double> rotated = a;
      for (double& v : rotated) v += delta;
      const double m0 = circular_mean(a);
      const double m1 = circular_mean(rotated);
      CHECK(std::fabs(reduce_angle(m1 - (m0 + delta))) < 1e-10);
      ++tested;
    }
  }

  TEST_CASE("circular mean ignores input order") {
    std::vector<double> a{0.4, -1.2, 2.8, 0.0, -2.9, 1.1};
    std::vector<double> b{1.1, 0.4, -2.9, 2.8, -1.2, 0.0};
    CHECK(circular_mean(a) == doctest::Approx(circular_mean(b)).epsilon(1e-12));
  }

  TEST_CASE("region index covers the image in row-major order") {
    CHECK(region_of(0, 0, 1600, 440) == 0);
    CHECK(region_of(439, 439, 1600, 440) == 1599);
    CHECK(region_of(439, 0, 1600, 440) == 39);
    CHECK(region_of(0, 439, 1600, 440) == 1560);
    CHECK(region_of(11, 0, 1600, 440) == 1);   // 440/40 = 11 px per region
    CHECK(region_of(10, 10, 1600, 440) == 0);
    CHECK(region_of(0, 11, 1600, 440) == 40);

    CHECK_THROWS_AS(region_of(0, 0, 1601, 440), InvariantError);  // not square
    CHECK_THROWS_AS(region_of(0, 0, 0, 440), InvariantError);
    CHECK_THROWS_AS(region_of(-1, 0, 16, 440), InvariantError);
    CHECK_THROWS_AS(region_of(440, 0, 16, 440), InvariantError);
    CHECK_THROWS_AS(region_of(0, 0, 1600, 16), InvariantError);  // image < grid
  }

  TEST_CASE("extract_features averages magnitudes per region") {
    // 4x4 field, m = 4: each region is 2x2. Region 0 has magnitudes
    // {1,3,1,3} -> 2; region 3 has {5,5,5,5} -> 5.
    FlowField f;
    f.width = f.height = 4;
    f.magnitude_px = {1, 3, 0, 0, 1, 3, 0, 0, 0, 0, 5, 5, 0, 0, 5, 5};
    f.angle_rad.assign(16, 0.5f);

    const FeatureVector v = extract_features(f, 4);
    REQUIRE(v.values.size() == 8);
    CHECK(v.m() == 4);
    CHECK(v.values[0] == doctest::Approx(2.0));
    CHECK(v.values[1] == doctest::Approx(0.0));
    CHECK(v.values[2] == doctest::Approx(0.0));
    CHECK(v.values[3] == doctest::Approx(5.0));
    for (int r = 0; r < 4; ++r) {
      CHECK(v.values[4 + r] == doctest::Approx(0.5).epsilon(1e-6));
    }
  }

  TEST_CASE("extract_features uses the circular mean for angles") {
    FlowField f;
    f.width = f.height = 2;
    f.magnitude_px = {1, 1, 1, 1};
    const float a = static_cast<float>(3.0 * kPi / 4.0);
    f.angle_rad = {a, -a, a, -a};
    const FeatureVector v = extract_features(f, 1);
    REQUIRE(v.values.size() == 2);
    CHECK(v.values[0] == 1.0f);
    // Antipodal-cancelled mean folds to +pi (float).
    CHECK(v.values[1] == static_cast<float>(kPi));
  }

  TEST_CASE("extract_features validates the grid") {
    FlowField f;
    f.width = 4;
    f.height = 3;
    f.magnitude_px.assign(12, 0.0f);
    f.angle_rad.assign(12, 0.0f);
    CHECK_THROWS_AS(extract_features(f, 4), InvariantError);  // not square
    f.height = 4;
    f.magnitude_px.assign(16, 0.0f);
    f.angle_rad.assign(16, 0.0f);
    CHECK_THROWS_AS(extract_features(f, 25), InvariantError);  // grid > image
    CHECK_THROWS_AS(extract_features(f, 3), InvariantError);   // not a square
  }

  TEST_CASE("balanced partition when the side is not divisible by the grid") {
    // 5x5 image, m = 4: columns split 2/3 (widths differ by at most one).
    CHECK(region_of(0, 0, 4, 5) == 0);
    CHECK(region_of(2, 0, 4, 5) == 0);  // 2*2/5 = 0
    CHECK(region_of(3, 0, 4, 5) == 1);  // 3*2/5 = 1
    CHECK(region_of(0, 3, 4, 5) == 2);
    CHECK(region_of(4, 4, 4, 5) == 3);
  }
}
