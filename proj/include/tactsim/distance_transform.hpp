#pragma once

#include <cstdint>
#include <vector>

namespace tactsim {

// For every pixel of a w x h grid, find the index (y*w + x) of the nearest
// seed pixel under exact Euclidean distance. `seeds` marks seed pixels with a
// nonnegative value (its own payload is not used; the returned map stores
// pixel indices). Ties resolve to the seed found by the scan order, which is
// deterministic. Throws if no seed is present.
std::vector<std::int32_t> nearest_seed_map(int width, int height,
                                           const std::vector<bool>& is_seed);

}  // namespace tactsim
