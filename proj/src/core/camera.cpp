#include "ptzcalib/core/camera.hpp"

#include <sstream>

#include "ptzcalib/core/errors.hpp"

namespace ptzcalib {

void CameraBase::validate() const {
  if (!center.allFinite() || !base_rotation.allFinite() || !principal_point.allFinite()) {
    throw InvalidArgument("camera base contains non-finite values");
  }
  const double orthogonality =
      (base_rotation.transpose() * base_rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (orthogonality >= 1e-9) {
    std::ostringstream os;
    os << "base_rotation is not orthonormal (max |S^T S - I| = " << orthogonality << ")";
    throw InvalidArgument(os.str());
  }
  if (base_rotation.determinant() <= 0.0) {
    throw InvalidArgument("base_rotation has determinant -1 (reflection)");
  }
  if (image_size.width <= 0 || image_size.height <= 0) {
    throw InvalidArgument("image size must be positive");
  }
  if (!image_size.contains(principal_point)) {
    throw InvalidArgument("principal point lies outside the image");
  }
}

void PtzParams::validate() const {
  if (!std::isfinite(pan) || !std::isfinite(tilt) || !std::isfinite(focal_length)) {
    throw InvalidArgument("ptz parameters must be finite");
  }
  if (focal_length <= 0.0) {
    throw InvalidArgument("focal_length must be positive");
  }
}

Eigen::Matrix3d camera_rotation(const PtzCamera& cam) {
  return pan_tilt_rotation(cam.ptz.pan, cam.ptz.tilt) * cam.base.base_rotation;
}

Eigen::Matrix<double, 3, 4> compose_projection(const PtzCamera& cam) {
  Eigen::Matrix<double, 3, 4> extrinsic;
  extrinsic.leftCols<3>().setIdentity();
  extrinsic.col(3) = -cam.base.center;
  return intrinsic_matrix(cam.ptz.focal_length, Eigen::Vector2d(cam.base.principal_point)) *
         pan_tilt_rotation(cam.ptz.pan, cam.ptz.tilt) * cam.base.base_rotation * extrinsic;
}

std::optional<Eigen::Vector2d> project_point(const PtzCamera& cam, const Eigen::Vector3d& world_point) {
  const Eigen::Vector3d in_camera = camera_rotation(cam) * (world_point - cam.base.center);
  if (in_camera.z() <= 0.0) return std::nullopt;
  const double f = cam.ptz.focal_length;
  return Eigen::Vector2d(f * in_camera.x() / in_camera.z() + cam.base.principal_point.x(),
                         f * in_camera.y() / in_camera.z() + cam.base.principal_point.y());
}

Eigen::Vector3d back_project_ray(const PtzCamera& cam, const Eigen::Vector2d& pixel) {
  const Eigen::Vector2d centered = (pixel - cam.base.principal_point) / cam.ptz.focal_length;
  return (camera_rotation(cam).transpose() * Eigen::Vector3d(centered.x(), centered.y(), 1.0)).normalized();
}

std::optional<Eigen::Vector2d> try_project_ray(const PtzParams& ptz, const Eigen::Vector2d& principal_point,
                                               const Ray& ray) {
  if (!(std::abs(ray.pan - ptz.pan) < 90.0) || !(std::abs(ray.tilt - ptz.tilt) < 90.0)) {
    return std::nullopt;
  }
  return project_ray(ptz.pan, ptz.tilt, ptz.focal_length, principal_point, ray.pan, ray.tilt);
}

Eigen::Vector2d project_ray(const PtzParams& ptz, const Eigen::Vector2d& principal_point, const Ray& ray) {
  auto pixel = try_project_ray(ptz, principal_point, ray);
  if (!pixel) {
    throw InvalidArgument("ray lies outside the camera's forward hemisphere");
  }
  return *pixel;
}

Ray pixel_to_ray(const PtzParams& ptz, const Eigen::Vector2d& principal_point, const Eigen::Vector2d& pixel) {
  const double f = ptz.focal_length;
  return {ptz.pan + rad2deg(std::atan((pixel.x() - principal_point.x()) / f)),
          ptz.tilt - rad2deg(std::atan((pixel.y() - principal_point.y()) / f))};
}

Eigen::Matrix3d field_to_image_homography(const PtzCamera& cam) {
  const Eigen::Matrix<double, 3, 4> p = compose_projection(cam);
  Eigen::Matrix3d h;
  h.col(0) = p.col(0);
  h.col(1) = p.col(1);
  h.col(2) = p.col(3);
  const double norm = h.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateConfiguration("field homography is zero");
  }
  h /= norm;
  if (std::abs(h.determinant()) <= kDehomogenizeEpsilon) {
    throw DegenerateConfiguration("field homography is singular (camera center on the field plane?)");
  }
  return h;
}

}  // namespace ptzcalib
