#pragma once

#include <cmath>
#include <optional>

#include "ptzcalib/core/rotation.hpp"
#include "ptzcalib/core/types.hpp"

namespace ptzcalib {

inline constexpr double kDehomogenizeEpsilon = 1e-12;

template <typename Scalar>
Matrix3<Scalar> intrinsic_matrix(Scalar focal_length, const Vector2<Scalar>& principal_point) {
  Matrix3<Scalar> k = Matrix3<Scalar>::Identity();
  k(0, 0) = focal_length;
  k(1, 1) = focal_length;
  k(0, 2) = principal_point.x();
  k(1, 2) = principal_point.y();
  return k;
}

/// World -> camera rotation Q_phi Q_theta S.
Eigen::Matrix3d camera_rotation(const PtzCamera& cam);

/// P = K Q_phi Q_theta S [I | -C].
Eigen::Matrix<double, 3, 4> compose_projection(const PtzCamera& cam);

/// Pixel of a world point, or nullopt when the point is at or behind the
/// image plane (depth <= 0).
std::optional<Eigen::Vector2d> project_point(const PtzCamera& cam, const Eigen::Vector3d& world_point);

/// Unit world-frame direction through a pixel.
Eigen::Vector3d back_project_ray(const PtzCamera& cam, const Eigen::Vector2d& pixel);

// Separable pan/tilt ray model:
//   x = u + f tan(ray_pan - pan)
//   y = v - f tan(ray_tilt - tilt)
// The tilt term carries a minus sign because image y grows downward while
// positive tilt looks up. Exact on the principal column for any tilt.

template <typename Scalar>
Vector2<Scalar> project_ray(Scalar pan, Scalar tilt, Scalar focal_length,
                            const Vector2<Scalar>& principal_point, Scalar ray_pan,
                            Scalar ray_tilt) {
  using std::tan;
  return {principal_point.x() + focal_length * tan(deg2rad(ray_pan - pan)),
          principal_point.y() - focal_length * tan(deg2rad(ray_tilt - tilt))};
}

/// Throws InvalidArgument when the ray is outside the open hemisphere
/// |ray_pan - pan| < 90, |ray_tilt - tilt| < 90.
Eigen::Vector2d project_ray(const PtzParams& ptz, const Eigen::Vector2d& principal_point, const Ray& ray);

/// Same as project_ray but returns nullopt outside the hemisphere.
std::optional<Eigen::Vector2d> try_project_ray(const PtzParams& ptz, const Eigen::Vector2d& principal_point,
                                               const Ray& ray);

Ray pixel_to_ray(const PtzParams& ptz, const Eigen::Vector2d& principal_point, const Eigen::Vector2d& pixel);

/// Field plane (z = 0) to image homography: columns 1, 2 and 4 of P, scaled
/// to unit Frobenius norm. The third row then stays proportional to depth
/// with a positive factor. Throws DegenerateConfiguration when singular.
Eigen::Matrix3d field_to_image_homography(const PtzCamera& cam);

/// Horizontal field of view in degrees.
inline double horizontal_fov(double focal_length, int image_width) {
  return rad2deg(2.0 * std::atan(image_width / (2.0 * focal_length)));
}

}  // namespace ptzcalib
