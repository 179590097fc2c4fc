#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"
#include "tactsim/common.hpp"
#include "tactsim/distance_transform.hpp"

using namespace tactsim;

namespace {

// O(pixels * seeds) reference: the exact squared distance to the nearest seed.
std::vector<long> brute_force_sq(int w, int h, const std::vector<bool>& seed) {
  std::vector<long> best(static_cast<std::size_t>(w) * h, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      long b = -1;
      for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
          if (!seed[static_cast<std::size_t>(sy) * w + sx]) continue;
          const long d = static_cast<long>(sx - x) * (sx - x) +
                         static_cast<long>(sy - y) * (sy - y);
          if (b < 0 || d < b) b = d;
        }
      }
      best[static_cast<std::size_t>(y) * w + x] = b;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("distance_transform") {
  TEST_CASE("single seed: every pixel maps to it") {
    const int w = 7, h = 5;
    std::vector<bool> seed(static_cast<std::size_t>(w) * h, false);
    seed[2 * w + 3] = true;
    const std::vector<std::int32_t> map = nearest_seed_map(w, h, seed);
    for (std::int32_t v : map) CHECK(v == 2 * w + 3);
  }

  TEST_CASE("all seeds: every pixel maps to itself") {
    const int w = 6, h = 4;
    std::vector<bool> seed(static_cast<std::size_t>(w) * h, true);
    const std::vector<std::int32_t> map = nearest_seed_map(w, h, seed);
    for (std::size_t i = 0; i < map.size(); ++i) {
      CHECK(map[i] == static_cast<std::int32_t>(i));
    }
  }

  TEST_CASE("no seed throws") {
    std::vector<bool> seed(12, false);
    CHECK_THROWS_AS(nearest_seed_map(4, 3, seed), InvariantError);
  }

  TEST_CASE("matches the brute-force oracle on random grids") {
    std::mt19937 gen(20240817);
    for (int trial = 0; trial < 40; ++trial) {
      const int w = 1 + static_cast<int>(gen() % 24);
      const int h = 1 + static_cast<int>(gen() % 20);
      const std::size_t total = static_cast<std::size_t>(w) * h;
      std::vector<bool> seed(total, false);
      const int n_seeds = 1 + static_cast<int>(gen() % 8);
      for (int s = 0; s < n_seeds; ++s) seed[gen() % total] = true;

      const std::vector<std::int32_t> map = nearest_seed_map(w, h, seed);
      const std::vector<long> ref = brute_force_sq(w, h, seed);
      REQUIRE(map.size() == total);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const std::int32_t s = map[i];
          REQUIRE(s >= 0);
          REQUIRE(static_cast<std::size_t>(s) < total);
          CHECK(seed[static_cast<std::size_t>(s)]);  // maps to an actual seed
          const int sx = s % w, sy = s / w;
          const long d = static_cast<long>(sx - x) * (sx - x) +
                         static_cast<long>(sy - y) * (sy - y);
          // Exact Euclidean nearest: distance equality even when the winning
          // seed differs under ties.
          CHECK(d == ref[i]);
        }
      }
    }
  }

  TEST_CASE("degenerate one-row and one-column grids") {
    std::vector<bool> row(9, false);
    row[6] = true;
    const std::vector<std::int32_t> m1 = nearest_seed_map(9, 1, row);
    for (std::int32_t v : m1) CHECK(v == 6);
    const std::vector<std::int32_t> m2 = nearest_seed_map(1, 9, row);
    for (std::int32_t v : m2) CHECK(v == 6);
  }
}
