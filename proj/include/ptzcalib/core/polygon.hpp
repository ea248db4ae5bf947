#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ptzcalib {

using Polygon2d = std::vector<Eigen::Vector2d>;

/// Keeps the part of a polygon where a*x + b*y + c >= 0, with
/// half_plane = (a, b, c). One Sutherland-Hodgman pass.
Polygon2d clip_polygon(const Polygon2d& subject, const Eigen::Vector3d& half_plane);

/// Sutherland-Hodgman clip of a polygon by a convex polygon (either winding).
Polygon2d clip_polygon(const Polygon2d& subject, const Polygon2d& convex_clip);

/// Absolute shoelace area.
double polygon_area(const Polygon2d& polygon);

Polygon2d axis_aligned_rectangle(double x0, double y0, double x1, double y1);

/// Liang-Barsky clip of segment ab to [x0, x1] x [y0, y1].
std::optional<std::pair<Eigen::Vector2d, Eigen::Vector2d>> clip_segment(const Eigen::Vector2d& a,
                                                                        const Eigen::Vector2d& b, double x0,
                                                                        double y0, double x1, double y1);

}  // namespace ptzcalib
