#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ptzcalib/core/field_model.hpp"
#include "ptzcalib/core/types.hpp"

namespace ptzcalib {

inline constexpr double kDefaultOverlayStep = 0.25;

struct OverlayPolyline {
  /// Index into segments, then arcs (arcs are offset by segments.size()).
  int primitive = 0;
  std::vector<Eigen::Vector2d> points;
};

/// Samples every marking every sample_step meters, projects the samples and
/// clips the resulting polylines to the image rectangle. Throws
/// InvalidArgument for a non-positive step.
std::vector<OverlayPolyline> render_field_overlay(const PtzCamera& cam, const FieldModel& field,
                                                  double sample_step = kDefaultOverlayStep);

}  // namespace ptzcalib
