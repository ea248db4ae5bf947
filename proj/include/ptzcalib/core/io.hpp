#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ptzcalib/core/field_model.hpp"
#include "ptzcalib/core/overlay.hpp"
#include "ptzcalib/core/types.hpp"

namespace ptzcalib {

// Field model files are JSON:
//   {"length": 105, "width": 68,
//    "key_points": [{"name": "...", "x": 0, "y": 0}],
//    "segments":   [{"from": [x, y], "to": [x, y]}],
//    "arcs":       [{"center": [x, y], "radius": r, "start_deg": a, "end_deg": b}]}
// All values in meters (angles in degrees).

nlohmann::json field_to_json(const FieldModel& field);
/// Throws ParseError on schema errors and InvalidArgument on invariant errors.
FieldModel field_from_json(const nlohmann::json& j);
FieldModel read_field_model(const std::filesystem::path& path);
void write_field_model(const std::filesystem::path& path, const FieldModel& field);

// Camera records: one camera per line, 19 whitespace separated numbers
//   cx cy cz  s00 s01 s02 s10 s11 s12 s20 s21 s22  u v  width height  pan tilt focal
// Blank lines and lines starting with '#' are skipped.

PtzCamera parse_camera_record(std::string_view line);
std::string format_camera_record(const PtzCamera& cam);
std::vector<PtzCamera> read_camera_records(std::istream& in);
std::vector<PtzCamera> read_camera_file(const std::filesystem::path& path);
void write_camera_records(std::ostream& out, std::span<const PtzCamera> cameras);

nlohmann::json base_to_json(const CameraBase& base);
CameraBase base_from_json(const nlohmann::json& j);
nlohmann::json ptz_to_json(const PtzParams& ptz);
PtzParams ptz_from_json(const nlohmann::json& j);
nlohmann::json overlay_to_json(const std::vector<OverlayPolyline>& overlay);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ptzcalib
