#pragma once

#include <Eigen/Dense>

namespace ptzcalib {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Matrix34 = Eigen::Matrix<Scalar, 3, 4>;

struct ImageSize {
  int width = 1280;
  int height = 720;

  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= width && p.y() <= height;
  }
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Time-invariant part of a PTZ camera: center of projection C and mounting
/// rotation S (world -> base frame).
struct CameraBase {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Matrix3d base_rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector2d principal_point{640.0, 360.0};
  ImageSize image_size;

  /// Throws InvalidArgument when S is not a proper rotation or the principal
  /// point lies outside the image.
  void validate() const;
};

/// Time-varying part: pan and tilt in degrees, focal length in pixels.
struct PtzParams {
  double pan = 0.0;
  double tilt = 0.0;
  double focal_length = 1.0;

  void validate() const;
};

/// A viewing direction in the base frame as (pan, tilt) degrees. The ray
/// (pan, tilt) is the optical axis of the camera with the same pan and tilt.
struct Ray {
  double pan = 0.0;
  double tilt = 0.0;
};

struct PtzCamera {
  CameraBase base;
  PtzParams ptz;

  void validate() const {
    base.validate();
    ptz.validate();
  }
};

struct Correspondence {
  Eigen::Vector3d world_point = Eigen::Vector3d::Zero();
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

}  // namespace ptzcalib
