#pragma once

#include <stdexcept>
#include <string>

namespace tactsim {

// Error categories mapped to CLI exit codes: usage=2, io=3, invariant=4.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0, y = 0.0;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace tactsim
