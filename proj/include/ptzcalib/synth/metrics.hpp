#pragma once

#include "ptzcalib/core/field_model.hpp"
#include "ptzcalib/core/polygon.hpp"
#include "ptzcalib/core/types.hpp"

namespace ptzcalib {

inline constexpr double kFootprintMargin = 20.0;  // meters around the field

struct EvalResult {
  double iou = 0.0;
  double pan_error = 0.0;       // degrees
  double tilt_error = 0.0;      // degrees
  double rotation_error = 0.0;  // degrees
  double focal_error = 0.0;     // pixels
};

struct RotationFocalError {
  double rotation_error = 0.0;  // degrees
  double focal_error = 0.0;     // pixels
};

/// Angle of R_gt^T R_est with R = Q_phi Q_theta S, and |f_gt - f_est|.
RotationFocalError rotation_focal_error(const PtzParams& gt, const PtzParams& est, const CameraBase& base);

/// Part of the field plane (z = 0) seen by the camera, clipped to the field
/// rectangle grown by `margin`. Convex; empty when the camera sees no ground.
Polygon2d field_footprint(const PtzCamera& cam, const FieldModel& field, double margin = kFootprintMargin);

/// Top-view IoU of the two footprints. Two empty footprints count as equal
/// (1.0). Throws DegenerateConfiguration for a singular homography.
double compute_iou(const PtzCamera& gt, const PtzCamera& est, const FieldModel& field,
                   double margin = kFootprintMargin);

/// IoU plus parameter errors; rotation error uses the base of `gt`.
EvalResult evaluate_estimate(const PtzCamera& gt, const PtzCamera& est, const FieldModel& field);

}  // namespace ptzcalib
