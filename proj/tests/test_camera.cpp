#include <cmath>

#include "doctest.h"
#include "tactsim/camera.hpp"
#include "tactsim/io_util.hpp"
#include "test_support.hpp"

using namespace tactsim;

TEST_SUITE("camera") {
  TEST_CASE("focal length comes from the fixed reference distance") {
    SensorConfig cfg;  // 440 px over a 32 mm side
    const CameraModel cam = make_camera(cfg);
    CHECK(cam.focal_px == 440.0 * 17.0 / 32.0);  // 233.75, exact in binary
    CHECK(cam.principal_point.x == 220.0);
    CHECK(cam.principal_point.y == 220.0);

    // The focal length depends on image size and surface side only, so moving
    // the camera changes magnification instead of being silently compensated.
    SensorConfig moved = cfg;
    moved.camera_distance_mm = 18.0;
    CHECK(make_camera(moved).focal_px == cam.focal_px);
  }

  TEST_CASE("camera frame: surface center on the axis, depth adds to range") {
    SensorConfig cfg;
    const Vec3 c = to_camera_frame({16.0, 16.0, cfg.gel_thickness_mm}, cfg);
    CHECK(c.x == 0.0);
    CHECK(c.y == 0.0);
    CHECK(c.z == cfg.camera_distance_mm);  // marker at the gel bottom is nearest
    const Vec3 s = to_camera_frame({10.0, 20.0, 0.0}, cfg);
    CHECK(s.x == -6.0);
    CHECK(s.y == 4.0);
    CHECK(s.z == cfg.camera_distance_mm + cfg.gel_thickness_mm);
  }

  TEST_CASE("projection is a pinhole with the principal point at the center") {
    SensorConfig cfg;
    const CameraModel cam = make_camera(cfg);
    const Vec2 center = project({0.0, 0.0, 17.0}, cam);
    CHECK(center.x == 220.0);
    CHECK(center.y == 220.0);
    const Vec2 off = project({1.0, -2.0, 17.0}, cam);
    CHECK(off.x == doctest::Approx(220.0 + 233.75 / 17.0).epsilon(1e-15));
    CHECK(off.y == doctest::Approx(220.0 - 2.0 * 233.75 / 17.0).epsilon(1e-15));
    CHECK_THROWS_AS(project({0.0, 0.0, 0.0}, cam), InvariantError);
    CHECK_THROWS_AS(project({0.0, 0.0, -1.0}, cam), InvariantError);
  }

  TEST_CASE("camera distance changes magnification") {
    SensorConfig near;     // 17 mm
    SensorConfig far = near;
    far.camera_distance_mm = 18.0;
    const Vec3 marker{17.0, 16.0, near.gel_thickness_mm};  // 1 mm off-center
    const Vec2 pn = project(to_camera_frame(marker, near), make_camera(near));
    const Vec2 pf = project(to_camera_frame(marker, far), make_camera(far));
    const double off_near = pn.x - 220.0;
    const double off_far = pf.x - 220.0;
    CHECK(off_near > off_far);  // farther camera, smaller image
    CHECK(off_near / off_far == doctest::Approx(18.0 / 17.0).epsilon(1e-12));
  }

  TEST_CASE("splats deposit unit mass and peak at the projected pixel") {
    SensorConfig cfg;
    cfg.image_size_px = 64;
    cfg.marker_count = 1;
    const CameraModel cam = make_camera(cfg);

    MarkerField one;
    one.positions = {{16.0, 16.0, cfg.gel_thickness_mm / 2.0}};
    int skipped = -1;
    const Image img = render(one, cam, cfg, &skipped);
    CHECK(skipped == 0);
    REQUIRE(img.width == 64);
    REQUIRE(img.height == 64);

    double sum = 0.0;
    float peak = 0.0f;
    int peak_x = -1, peak_y = -1;
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        sum += img.at(x, y);
        if (img.at(x, y) > peak) {
          peak = img.at(x, y);
          peak_x = x;
          peak_y = y;
        }
      }
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-4));
    const Vec2 p = project(to_camera_frame(one.positions[0], cfg), cam);
    CHECK(std::abs(peak_x + 0.5 - p.x) <= 1.0);
    CHECK(std::abs(peak_y + 0.5 - p.y) <= 1.0);
    CHECK(peak > 0.05f);

    MarkerField two = one;
    two.positions.push_back({8.0, 8.0, cfg.gel_thickness_mm / 2.0});
    const Image img2 = render(two, cam, cfg);
    double sum2 = 0.0;
    for (float v : img2.px) sum2 += v;
    CHECK(sum2 == doctest::Approx(2.0).epsilon(1e-4));
  }

  TEST_CASE("markers far outside the frame are skipped, not splatted") {
    SensorConfig cfg;
    cfg.image_size_px = 64;
    MarkerField field;
    field.positions = {{500.0, 16.0, 1.0}};
    int skipped = 0;
    const Image img = render(field, make_camera(cfg), cfg, &skipped);
    CHECK(skipped == 1);
    for (float v : img.px) CHECK(v == 0.0f);
    MarkerField empty;
    CHECK_THROWS_AS(render(empty, make_camera(cfg), cfg), InvariantError);
  }

  TEST_CASE("pgm output has the correct header and payload size") {
    testing::ScopedTempDir dir("pgm");
    Image img(8, 4);
    img.at(0, 0) = 1.0f;
    img.at(7, 3) = 0.5f;
    img.at(3, 2) = 2.0f;  // clamps to 255
    const std::string path = dir.file("img.pgm");
    write_pgm(path, img);
    const std::string bytes = read_file(path);
    const std::string header = "P5\n8 4\n255\n";
    REQUIRE(bytes.size() == header.size() + 32);
    CHECK(bytes.substr(0, header.size()) == header);
    CHECK(static_cast<unsigned char>(bytes[header.size()]) == 255);        // (0,0)
    CHECK(static_cast<unsigned char>(bytes[header.size() + 2 * 8 + 3]) == 255);  // clamped
    CHECK(static_cast<unsigned char>(bytes[header.size() + 3 * 8 + 7]) == 128);  // 0.5
    CHECK(static_cast<unsigned char>(bytes[header.size() + 1]) == 0);
  }
}
