#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ptzcalib {

struct NamedPoint {
  std::string name;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

struct LineSegment {
  Eigen::Vector2d from = Eigen::Vector2d::Zero();
  Eigen::Vector2d to = Eigen::Vector2d::Zero();
};

/// Circle or arc on the field plane; angles in degrees measured from +x
/// toward +y, swept from start_deg to end_deg (end_deg > start_deg).
struct CircleArc {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
  double start_deg = 0.0;
  double end_deg = 360.0;
};

/// Planar soccer field on z = 0 with a corner at the origin.
struct FieldModel {
  double length = 105.0;
  double width = 68.0;
  std::vector<NamedPoint> key_points;
  std::vector<LineSegment> segments;
  std::vector<CircleArc> arcs;

  /// Throws InvalidArgument when a primitive leaves the field rectangle or a
  /// key point name repeats.
  void validate() const;

  std::optional<Eigen::Vector3d> find_key_point(const std::string& name) const;

  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= length && p.y() <= width;
  }
};

/// Standard markings for a length x width pitch: touch and goal lines,
/// halfway line, center circle, penalty and goal areas, penalty arcs and
/// corner arcs. Key points are the marking intersections plus the two
/// penalty marks.
FieldModel standard_soccer_field(double length = 105.0, double width = 68.0);

}  // namespace ptzcalib
