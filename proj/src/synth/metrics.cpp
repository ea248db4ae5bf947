#include "ptzcalib/synth/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ptzcalib/core/angles.hpp"
#include "ptzcalib/core/camera.hpp"

namespace ptzcalib {

RotationFocalError rotation_focal_error(const PtzParams& gt, const PtzParams& est, const CameraBase& base) {
  const Eigen::Matrix3d r_gt = camera_rotation({base, gt});
  const Eigen::Matrix3d r_est = camera_rotation({base, est});
  const Eigen::AngleAxisd relative(r_gt.transpose() * r_est);
  return {rad2deg(relative.angle()), std::abs(gt.focal_length - est.focal_length)};
}

Polygon2d field_footprint(const PtzCamera& cam, const FieldModel& field, double margin) {
  const Eigen::Matrix3d h = field_to_image_homography(cam);
  const Eigen::Vector3d h1 = h.row(0).transpose();
  const Eigen::Vector3d h2 = h.row(1).transpose();
  const Eigen::Vector3d h3 = h.row(2).transpose();
  const double w = cam.base.image_size.width;
  const double ht = cam.base.image_size.height;
  // For q = (x, y, 1) in front of the camera (h3.q > 0), the pixel lies in
  // [0, w] x [0, ht] iff these four linear forms are non-negative.
  Polygon2d poly = axis_aligned_rectangle(-margin, -margin, field.length + margin, field.width + margin);
  const Eigen::Vector3d in_front = h3 - Eigen::Vector3d(0.0, 0.0, 1e-12 * h3.norm());
  for (const Eigen::Vector3d& plane : {in_front, h1, Eigen::Vector3d(w * h3 - h1), h2, Eigen::Vector3d(ht * h3 - h2)}) {
    poly = clip_polygon(poly, plane);
    if (poly.empty()) break;
  }
  return poly;
}

double compute_iou(const PtzCamera& gt, const PtzCamera& est, const FieldModel& field, double margin) {
  const Polygon2d a = field_footprint(gt, field, margin);
  const Polygon2d b = field_footprint(est, field, margin);
  const double area_a = a.size() >= 3 ? polygon_area(a) : 0.0;
  const double area_b = b.size() >= 3 ? polygon_area(b) : 0.0;
  if (area_a <= 0.0 && area_b <= 0.0) return 1.0;
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const Polygon2d inter = clip_polygon(a, b);
  const double area_i = inter.size() >= 3 ? polygon_area(inter) : 0.0;
  const double uni = area_a + area_b - area_i;
  return std::clamp(area_i / uni, 0.0, 1.0);
}

EvalResult evaluate_estimate(const PtzCamera& gt, const PtzCamera& est, const FieldModel& field) {
  EvalResult r;
  r.iou = compute_iou(gt, est, field);
  const auto rf = rotation_focal_error(gt.ptz, est.ptz, gt.base);
  r.rotation_error = rf.rotation_error;
  r.focal_error = rf.focal_error;
  r.pan_error = std::abs(wrap_degrees(gt.ptz.pan - est.ptz.pan));
  r.tilt_error = std::abs(wrap_degrees(gt.ptz.tilt - est.ptz.tilt));
  return r;
}

}  // namespace ptzcalib
