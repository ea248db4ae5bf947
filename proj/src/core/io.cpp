#include "ptzcalib/core/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ptzcalib/core/errors.hpp"

namespace ptzcalib {

namespace {

using nlohmann::json;

Eigen::Vector2d vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("expected a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

json vec2_json(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

template <typename Fn>
auto schema_guard(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json field_to_json(const FieldModel& field) {
  json j;
  j["length"] = field.length;
  j["width"] = field.width;
  j["key_points"] = json::array();
  for (const auto& kp : field.key_points) {
    j["key_points"].push_back({{"name", kp.name}, {"x", kp.position.x()}, {"y", kp.position.y()}});
  }
  j["segments"] = json::array();
  for (const auto& s : field.segments) {
    j["segments"].push_back({{"from", vec2_json(s.from)}, {"to", vec2_json(s.to)}});
  }
  j["arcs"] = json::array();
  for (const auto& a : field.arcs) {
    j["arcs"].push_back({{"center", vec2_json(a.center)},
                         {"radius", a.radius},
                         {"start_deg", a.start_deg},
                         {"end_deg", a.end_deg}});
  }
  return j;
}

FieldModel field_from_json(const json& j) {
  FieldModel field = schema_guard("field model", [&] {
    FieldModel f;
    f.length = j.at("length").get<double>();
    f.width = j.at("width").get<double>();
    for (const auto& kp : j.value("key_points", json::array())) {
      f.key_points.push_back(
          {kp.at("name").get<std::string>(), {kp.at("x").get<double>(), kp.at("y").get<double>(), 0.0}});
    }
    for (const auto& s : j.value("segments", json::array())) {
      f.segments.push_back({vec2(s.at("from")), vec2(s.at("to"))});
    }
    for (const auto& a : j.value("arcs", json::array())) {
      f.arcs.push_back({vec2(a.at("center")), a.at("radius").get<double>(), a.value("start_deg", 0.0),
                        a.value("end_deg", 360.0)});
    }
    return f;
  });
  field.validate();
  return field;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

FieldModel read_field_model(const std::filesystem::path& path) { return field_from_json(read_json_file(path)); }

void write_field_model(const std::filesystem::path& path, const FieldModel& field) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << field_to_json(field).dump(2) << '\n';
}

PtzCamera parse_camera_record(std::string_view line) {
  std::istringstream in{std::string(line)};
  double v[19];
  for (int i = 0; i < 19; ++i) {
    if (!(in >> v[i])) throw ParseError("camera record needs 19 numbers, got " + std::to_string(i));
  }
  std::string extra;
  if (in >> extra) throw ParseError("trailing data in camera record: " + extra);
  PtzCamera cam;
  cam.base.center = {v[0], v[1], v[2]};
  cam.base.base_rotation << v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11];
  cam.base.principal_point = {v[12], v[13]};
  cam.base.image_size = {static_cast<int>(v[14]), static_cast<int>(v[15])};
  if (cam.base.image_size.width != v[14] || cam.base.image_size.height != v[15]) {
    throw ParseError("image size must be integral");
  }
  cam.ptz = {v[16], v[17], v[18]};
  cam.validate();
  return cam;
}

std::string format_camera_record(const PtzCamera& cam) {
  std::string out;
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    if (!out.empty()) out += ' ';
    out += buf;
  };
  for (int i = 0; i < 3; ++i) put(cam.base.center[i]);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) put(cam.base.base_rotation(r, c));
  put(cam.base.principal_point.x());
  put(cam.base.principal_point.y());
  put(cam.base.image_size.width);
  put(cam.base.image_size.height);
  put(cam.ptz.pan);
  put(cam.ptz.tilt);
  put(cam.ptz.focal_length);
  return out;
}

std::vector<PtzCamera> read_camera_records(std::istream& in) {
  std::vector<PtzCamera> cams;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      cams.push_back(parse_camera_record(line));
    } catch (const Error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cams;
}

std::vector<PtzCamera> read_camera_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_camera_records(in);
}

void write_camera_records(std::ostream& out, std::span<const PtzCamera> cameras) {
  out << "# cx cy cz s00 s01 s02 s10 s11 s12 s20 s21 s22 u v width height pan tilt focal\n";
  for (const auto& cam : cameras) out << format_camera_record(cam) << '\n';
}

json base_to_json(const CameraBase& base) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(base.base_rotation(r, c));
  return {{"center", {base.center.x(), base.center.y(), base.center.z()}},
          {"base_rotation", rot},
          {"principal_point", vec2_json(base.principal_point)},
          {"image_size", {base.image_size.width, base.image_size.height}}};
}

CameraBase base_from_json(const json& j) {
  CameraBase base = schema_guard("camera base", [&] {
    CameraBase b;
    const auto& c = j.at("center");
    if (!c.is_array() || c.size() != 3) throw ParseError("center must have 3 numbers");
    b.center = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
    const auto& s = j.at("base_rotation");
    if (!s.is_array() || s.size() != 9) throw ParseError("base_rotation must have 9 numbers (row-major)");
    for (int i = 0; i < 9; ++i) b.base_rotation(i / 3, i % 3) = s[i].get<double>();
    b.principal_point = vec2(j.at("principal_point"));
    const auto& size = j.at("image_size");
    if (!size.is_array() || size.size() != 2) throw ParseError("image_size must be [width, height]");
    b.image_size = {size[0].get<int>(), size[1].get<int>()};
    return b;
  });
  base.validate();
  return base;
}

json ptz_to_json(const PtzParams& ptz) {
  return {{"pan", ptz.pan}, {"tilt", ptz.tilt}, {"focal_length", ptz.focal_length}};
}

PtzParams ptz_from_json(const json& j) {
  PtzParams ptz = schema_guard("ptz", [&] {
    return PtzParams{j.at("pan").get<double>(), j.at("tilt").get<double>(), j.at("focal_length").get<double>()};
  });
  ptz.validate();
  return ptz;
}

json overlay_to_json(const std::vector<OverlayPolyline>& overlay) {
  json out = json::array();
  for (const auto& line : overlay) {
    json pts = json::array();
    for (const auto& p : line.points) pts.push_back(vec2_json(p));
    out.push_back({{"primitive", line.primitive}, {"points", std::move(pts)}});
  }
  return out;
}

}  // namespace ptzcalib
