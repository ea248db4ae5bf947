#pragma once

#include <cmath>
#include <numbers>

namespace ptzcalib {

template <typename Scalar>
constexpr Scalar deg2rad(Scalar degrees) {
  return degrees * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad2deg(Scalar radians) {
  return radians * Scalar(180) / std::numbers::pi_v<Scalar>;
}

/// Wraps an angle in degrees into (-180, 180].
template <typename Scalar>
Scalar wrap_degrees(Scalar degrees) {
  Scalar wrapped = std::fmod(degrees, Scalar(360));
  if (wrapped <= Scalar(-180)) wrapped += Scalar(360);
  if (wrapped > Scalar(180)) wrapped -= Scalar(360);
  return wrapped;
}

}  // namespace ptzcalib
