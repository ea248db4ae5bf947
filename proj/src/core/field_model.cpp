#include "ptzcalib/core/field_model.hpp"

#include <cmath>
#include <set>

#include "ptzcalib/core/angles.hpp"
#include "ptzcalib/core/errors.hpp"

namespace ptzcalib {

namespace {

constexpr double kBoundsTolerance = 1e-9;

bool within(const FieldModel& field, const Eigen::Vector2d& p) {
  return p.x() >= -kBoundsTolerance && p.y() >= -kBoundsTolerance && p.x() <= field.length + kBoundsTolerance &&
         p.y() <= field.width + kBoundsTolerance;
}

}  // namespace

void FieldModel::validate() const {
  if (!(length > 0.0) || !(width > 0.0)) {
    throw InvalidArgument("field dimensions must be positive");
  }
  std::set<std::string> names;
  for (const auto& kp : key_points) {
    if (kp.name.empty()) throw InvalidArgument("key point with empty name");
    if (!names.insert(kp.name).second) throw InvalidArgument("duplicate key point name: " + kp.name);
    if (std::abs(kp.position.z()) > kBoundsTolerance || !within(*this, kp.position.head<2>())) {
      throw InvalidArgument("key point outside the field plane: " + kp.name);
    }
  }
  for (const auto& s : segments) {
    if (!within(*this, s.from) || !within(*this, s.to)) {
      throw InvalidArgument("line segment outside the field");
    }
  }
  for (const auto& a : arcs) {
    if (!(a.radius > 0.0) || !(a.end_deg > a.start_deg)) {
      throw InvalidArgument("arc needs positive radius and end_deg > start_deg");
    }
    // Check the arc's extreme points: its endpoints and any axis crossings.
    std::vector<double> probes{a.start_deg, a.end_deg};
    for (double k = std::ceil(a.start_deg / 90.0) * 90.0; k <= a.end_deg; k += 90.0) probes.push_back(k);
    for (double deg : probes) {
      const double t = deg2rad(deg);
      const Eigen::Vector2d p = a.center + a.radius * Eigen::Vector2d(std::cos(t), std::sin(t));
      if (!within(*this, p)) throw InvalidArgument("arc leaves the field");
    }
  }
}

std::optional<Eigen::Vector3d> FieldModel::find_key_point(const std::string& name) const {
  for (const auto& kp : key_points) {
    if (kp.name == name) return kp.position;
  }
  return std::nullopt;
}

FieldModel standard_soccer_field(double length, double width) {
  constexpr double kPenaltyDepth = 16.5;
  constexpr double kPenaltyHalfWidth = 20.16;
  constexpr double kGoalAreaDepth = 5.5;
  constexpr double kGoalAreaHalfWidth = 9.16;
  constexpr double kPenaltyMark = 11.0;
  constexpr double kCircleRadius = 9.15;
  constexpr double kCornerRadius = 1.0;

  FieldModel f;
  f.length = length;
  f.width = width;
  const double l = length;
  const double w = width;
  const double cy = w / 2.0;
  const double cx = l / 2.0;

  auto seg = [&f](double x0, double y0, double x1, double y1) {
    f.segments.push_back({{x0, y0}, {x1, y1}});
  };
  auto key = [&f](std::string name, double x, double y) {
    f.key_points.push_back({std::move(name), {x, y, 0.0}});
  };

  // Boundary and halfway line.
  seg(0, 0, l, 0);
  seg(l, 0, l, w);
  seg(l, w, 0, w);
  seg(0, w, 0, 0);
  seg(cx, 0, cx, w);

  for (int side = 0; side < 2; ++side) {
    const double goal_x = side == 0 ? 0.0 : l;
    const double dir = side == 0 ? 1.0 : -1.0;
    const std::string prefix = side == 0 ? "left_" : "right_";
    const double pa_x = goal_x + dir * kPenaltyDepth;
    const double ga_x = goal_x + dir * kGoalAreaDepth;

    seg(goal_x, cy - kPenaltyHalfWidth, pa_x, cy - kPenaltyHalfWidth);
    seg(pa_x, cy - kPenaltyHalfWidth, pa_x, cy + kPenaltyHalfWidth);
    seg(pa_x, cy + kPenaltyHalfWidth, goal_x, cy + kPenaltyHalfWidth);
    seg(goal_x, cy - kGoalAreaHalfWidth, ga_x, cy - kGoalAreaHalfWidth);
    seg(ga_x, cy - kGoalAreaHalfWidth, ga_x, cy + kGoalAreaHalfWidth);
    seg(ga_x, cy + kGoalAreaHalfWidth, goal_x, cy + kGoalAreaHalfWidth);

    key(prefix + "penalty_area_goal_line_near", goal_x, cy - kPenaltyHalfWidth);
    key(prefix + "penalty_area_goal_line_far", goal_x, cy + kPenaltyHalfWidth);
    key(prefix + "penalty_area_corner_near", pa_x, cy - kPenaltyHalfWidth);
    key(prefix + "penalty_area_corner_far", pa_x, cy + kPenaltyHalfWidth);
    key(prefix + "goal_area_goal_line_near", goal_x, cy - kGoalAreaHalfWidth);
    key(prefix + "goal_area_goal_line_far", goal_x, cy + kGoalAreaHalfWidth);
    key(prefix + "goal_area_corner_near", ga_x, cy - kGoalAreaHalfWidth);
    key(prefix + "goal_area_corner_far", ga_x, cy + kGoalAreaHalfWidth);

    const double mark_x = goal_x + dir * kPenaltyMark;
    key(prefix + "penalty_mark", mark_x, cy);

    // Penalty arc: the part of the circle around the mark outside the area.
    const double half_angle = rad2deg(std::acos((kPenaltyDepth - kPenaltyMark) / kCircleRadius));
    const double facing = side == 0 ? 0.0 : 180.0;
    f.arcs.push_back({{mark_x, cy}, kCircleRadius, facing - half_angle, facing + half_angle});
    const double arc_dy = kCircleRadius * std::sin(deg2rad(half_angle));
    key(prefix + "penalty_arc_near", pa_x, cy - arc_dy);
    key(prefix + "penalty_arc_far", pa_x, cy + arc_dy);
  }

  key("corner_left_near", 0, 0);
  key("corner_right_near", l, 0);
  key("corner_right_far", l, w);
  key("corner_left_far", 0, w);
  key("halfway_near", cx, 0);
  key("halfway_far", cx, w);
  key("center_spot", cx, cy);
  key("center_circle_near", cx, cy - kCircleRadius);
  key("center_circle_far", cx, cy + kCircleRadius);

  f.arcs.push_back({{cx, cy}, kCircleRadius, 0.0, 360.0});
  f.arcs.push_back({{0, 0}, kCornerRadius, 0.0, 90.0});
  f.arcs.push_back({{l, 0}, kCornerRadius, 90.0, 180.0});
  f.arcs.push_back({{l, w}, kCornerRadius, 180.0, 270.0});
  f.arcs.push_back({{0, w}, kCornerRadius, 270.0, 360.0});
  return f;
}

}  // namespace ptzcalib
