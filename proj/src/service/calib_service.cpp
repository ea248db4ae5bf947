#include "ptzcalib/service/calib_service.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>

#include "httplib.h"
#include "ptzcalib/core/angles.hpp"
#include "ptzcalib/core/errors.hpp"
#include "ptzcalib/core/io.hpp"
#include "ptzcalib/core/overlay.hpp"
#include "ptzcalib/core/random.hpp"
#include "ptzcalib/pose/pose_estimator.hpp"
#include "ptzcalib/synth/config.hpp"
#include "ptzcalib/synth/metrics.hpp"
#include "ptzcalib/synth/scene.hpp"

namespace ptzcalib {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSyntheticSessionStream = 0x5e55;
constexpr int kDefaultPatchRadius = 8;
constexpr int kDefaultExtractStride = 8;

// Thrown inside handlers, turned into a response at the boundary.
struct HttpError {
  int status;
  std::string code;
  std::string message;
  json detail;
};

[[noreturn]] void fail(int status, const std::string& code, const std::string& message, json detail = {}) {
  throw HttpError{status, code, message, std::move(detail)};
}

json parse_body(const std::string& body) {
  if (body.empty()) fail(400, error_code::kInvalidPayload, "request body is empty");
  try {
    json j = json::parse(body);
    if (!j.is_object()) fail(400, error_code::kInvalidPayload, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    fail(400, error_code::kInvalidPayload, "malformed JSON", e.what());
  }
}

Eigen::Vector2d pixel_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    fail(400, error_code::kInvalidPayload, what + " must be [x, y]");
  Eigen::Vector2d p{j[0].get<double>(), j[1].get<double>()};
  if (!p.allFinite()) fail(400, error_code::kInvalidPayload, what + " must be finite");
  return p;
}

ServiceResponse to_response(const HttpError& e) { return {e.status, error_body(e.code, e.message, e.detail)}; }

template <typename Fn>
ServiceResponse guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const HttpError& e) {
    return to_response(e);
  } catch (const json::exception& e) {
    return {400, error_body(error_code::kInvalidPayload, "payload has the wrong shape", e.what())};
  } catch (const InvalidArgument& e) {
    return {400, error_body(error_code::kInvalidPayload, e.what())};
  } catch (const ParseError& e) {
    return {400, error_body(error_code::kInvalidPayload, e.what())};
  } catch (const std::exception& e) {
    return {500, error_body(error_code::kInternal, e.what())};
  }
}

json solution_json(const CalibSolution& sol) {
  return {{"pan", sol.ptz.pan},
          {"tilt", sol.ptz.tilt},
          {"focal_length", sol.ptz.focal_length},
          {"reprojection_rmse", sol.reprojection_rmse},
          {"converged", sol.converged}};
}

json session_json(const SessionState& s) {
  json annotation = json::array();
  for (const auto& a : s.annotation)
    annotation.push_back({{"key_point", a.key_point}, {"pixel", {a.pixel.x(), a.pixel.y()}}});
  json out{{"session_id", s.session_id},
           {"base", base_to_json(s.base)},
           {"field", field_to_json(s.field)},
           {"image_source", s.image_source},
           {"annotation", std::move(annotation)},
           {"ground_truth", nullptr},
           {"last_solution", nullptr}};
  if (s.image) out["image"] = {{"width", s.image->width}, {"height", s.image->height}};
  if (s.ground_truth) out["ground_truth"] = ptz_to_json(*s.ground_truth);
  if (s.last_solution) out["last_solution"] = solution_json(*s.last_solution);
  return out;
}

std::optional<double> parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

// Pixels of the bright marking render on a stride grid, away from the border.
std::vector<Eigen::Vector2d> marking_pixels(const GrayImage& image, int stride, int radius) {
  std::vector<Eigen::Vector2d> out;
  for (int y = radius + 1; y + radius < image.height; y += stride)
    for (int x = radius + 1; x + radius < image.width; x += stride) {
      bool hit = false;
      for (int dy = 0; dy < stride && !hit && y + dy + radius < image.height; ++dy)
        for (int dx = 0; dx < stride && !hit && x + dx + radius < image.width; ++dx)
          if (image.at(x + dx, y + dy) > 128) {
            out.emplace_back(x + dx, y + dy);
            hit = true;
          }
    }
  return out;
}

}  // namespace

json error_body(const std::string& code, const std::string& message, const json& detail) {
  return {{"code", code}, {"message", message}, {"detail", detail}};
}

std::string base64_decode(std::string_view text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+' || c == '-') return 62;
    if (c == '/' || c == '_') return 63;
    return -1;
  };
  std::string out;
  out.reserve(text.size() / 4 * 3);
  unsigned buffer = 0;
  int bits = 0;
  std::size_t i = 0;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '=') break;
    if (c == '\n' || c == '\r' || c == ' ') continue;
    const int v = value(c);
    if (v < 0) throw ParseError("invalid base64 character");
    buffer = (buffer << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((buffer >> bits) & 0xffu));
    }
  }
  for (; i < text.size(); ++i)
    if (text[i] != '=' && text[i] != '\n' && text[i] != '\r') throw ParseError("data after base64 padding");
  return out;
}

CalibService::CalibService(FieldModel default_field, std::shared_ptr<const PanTiltForest> forest,
                           std::optional<std::filesystem::path> persist_dir)
    : default_field_(std::move(default_field)), forest_(std::move(forest)), persist_dir_(std::move(persist_dir)) {
  default_field_.validate();
  if (persist_dir_) std::filesystem::create_directories(*persist_dir_);
}

std::shared_ptr<SessionState> CalibService::find(const std::string& id) {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(404, error_code::kSessionNotFound, "unknown session", id);
  return it->second;
}

void CalibService::persist(const SessionState& session) const {
  if (!persist_dir_) return;
  const auto path = *persist_dir_ / (session.session_id + ".json");
  std::ofstream out(path);
  out << session_json(session).dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

ServiceResponse CalibService::create_session(const std::string& body) {
  return guarded([&]() -> ServiceResponse {
    const json req = parse_body(body);
    auto session = std::make_shared<SessionState>();
    if (!req.contains("base")) fail(400, error_code::kInvalidPayload, "missing \"base\"");
    session->base = base_from_json(req.at("base"));
    session->field = req.contains("field") ? field_from_json(req.at("field")) : default_field_;
    if (req.contains("ground_truth")) session->ground_truth = ptz_from_json(req.at("ground_truth"));

    session->image_source = "none";
    if (req.contains("image")) {
      const json& img = req.at("image");
      if (img.contains("pgm_base64")) {
        const auto& text = img.at("pgm_base64").get_ref<const std::string&>();
        if (text.size() / 4 * 3 > kMaxImageBytes + 3)
          fail(413, error_code::kPayloadTooLarge, "image larger than 16 MB");
        const std::string bytes = base64_decode(text);
        if (bytes.size() > kMaxImageBytes) fail(413, error_code::kPayloadTooLarge, "image larger than 16 MB");
        session->image = parse_pgm(bytes);
        session->image_source = "upload";
      } else if (img.contains("synthetic")) {
        const json& syn = img.at("synthetic");
        PtzParams ptz;
        if (syn.contains("ptz")) {
          ptz = ptz_from_json(syn.at("ptz"));
        } else if (syn.contains("seed")) {
          Rng rng(mix_seed({syn.at("seed").get<std::uint64_t>(), kSyntheticSessionStream}));
          ptz = sample_camera(ExperimentConfig{}, rng);
        } else {
          fail(400, error_code::kInvalidPayload, "synthetic image needs \"ptz\" or \"seed\"");
        }
        session->image = render_markings(PtzCamera{session->base, ptz}, session->field);
        session->image_source = "synthetic";
        if (!session->ground_truth) session->ground_truth = ptz;
      } else {
        fail(400, error_code::kInvalidPayload, "image needs \"pgm_base64\" or \"synthetic\"");
      }
      if (session->image->width != session->base.image_size.width ||
          session->image->height != session->base.image_size.height)
        fail(400, error_code::kInvalidPayload, "image size does not match base image_size",
             {{"image", {session->image->width, session->image->height}},
              {"base", {session->base.image_size.width, session->base.image_size.height}}});
    }

    {
      std::unique_lock lock(sessions_mutex_);
      session->session_id = "s" + std::to_string(next_id_++);
      sessions_.emplace(session->session_id, session);
    }
    json out;
    {
      std::lock_guard lock(session->mutex);
      persist(*session);
      out = session_json(*session);
    }
    return {201, out};
  });
}

ServiceResponse CalibService::get_session(const std::string& id) {
  return guarded([&]() -> ServiceResponse {
    auto session = find(id);
    std::lock_guard lock(session->mutex);
    return {200, session_json(*session)};
  });
}

std::optional<std::string> CalibService::session_image(const std::string& id) {
  std::shared_ptr<SessionState> session;
  {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    session = it->second;
  }
  std::lock_guard lock(session->mutex);
  if (!session->image) return std::nullopt;
  return encode_pgm(*session->image);
}

ServiceResponse CalibService::calibrate(const std::string& id, const std::string& body) {
  return guarded([&]() -> ServiceResponse {
    auto session = find(id);
    const json req = parse_body(body);
    const json& pairs = req.contains("pairs") ? req.at("pairs") : json();
    if (!pairs.is_array() || pairs.size() != 2)
      fail(400, error_code::kInvalidPayload, "\"pairs\" must hold exactly two {key_point, pixel} entries");

    std::vector<AnnotationPair> annotation;
    for (const auto& p : pairs) {
      if (!p.is_object() || !p.contains("key_point") || !p.at("key_point").is_string() || !p.contains("pixel"))
        fail(400, error_code::kInvalidPayload, "each pair needs \"key_point\" and \"pixel\"");
      annotation.push_back({p.at("key_point").get<std::string>(), pixel_from_json(p.at("pixel"), "pixel")});
    }

    std::lock_guard lock(session->mutex);
    Correspondence corr[2];
    for (int i = 0; i < 2; ++i) {
      const auto point = session->field.find_key_point(annotation[i].key_point);
      if (!point)
        fail(422, error_code::kUnknownKeyPoint, "unknown key point \"" + annotation[i].key_point + "\"",
             {{"key_point", annotation[i].key_point}});
      corr[i] = {*point, annotation[i].pixel};
    }
    session->annotation = annotation;

    CalibSolution sol;
    try {
      sol = calibrate_two_points(TwoPointProblem{session->base, corr[0], corr[1]});
    } catch (const DegenerateConfiguration& e) {
      fail(422, error_code::kDegenerateConfiguration, "degenerate configuration", e.what());
    } catch (const SolverFailure& e) {
      fail(422, error_code::kSolverFailure, "no calibration found", e.what());
    }
    session->last_solution = sol;
    persist(*session);
    return {200,
            {{"session_id", session->session_id},
             {"solution", solution_json(sol)},
             {"overlay", overlay_to_json(render_field_overlay(PtzCamera{session->base, sol.ptz}, session->field))}}};
  });
}

ServiceResponse CalibService::auto_calibrate(const std::string& id, const std::string& body) {
  return guarded([&]() -> ServiceResponse {
    auto session = find(id);
    if (!forest_) fail(409, error_code::kNoForest, "no forest loaded; start the service with --forest");
    const json req = parse_body(body);

    RansacConfig ransac;
    if (req.contains("ransac")) {
      const json& r = req.at("ransac");
      ransac.inlier_threshold = r.value("inlier_threshold", ransac.inlier_threshold);
      ransac.min_inliers = r.value("min_inliers", ransac.min_inliers);
      ransac.seed = r.value("seed", ransac.seed);
      if (r.contains("max_iterations")) ransac.max_iterations = r.at("max_iterations").get<int>();
    }
    ransac.validate();
    std::optional<double> threshold;
    if (req.contains("distance_threshold")) threshold = req.at("distance_threshold").get<double>();

    std::lock_guard lock(session->mutex);
    std::vector<Keypoint> keypoints;
    if (req.value("extract_from_image", false)) {
      if (!session->image) fail(400, error_code::kInvalidPayload, "session has no image to extract from");
      const int radius = req.value("patch_radius", kDefaultPatchRadius);
      if (radius <= 0 || radius % 2 != 0)
        fail(400, error_code::kInvalidPayload, "patch_radius must be a positive even number");
      std::vector<Eigen::Vector2d> pixels;
      if (req.contains("pixels")) {
        for (const auto& p : req.at("pixels")) pixels.push_back(pixel_from_json(p, "pixels entry"));
      } else {
        pixels = marking_pixels(*session->image, req.value("stride", kDefaultExtractStride), radius);
      }
      keypoints = extract_keypoints(*session->image, pixels, radius);
    } else if (req.contains("keypoints")) {
      for (const auto& k : req.at("keypoints")) {
        Keypoint kp;
        kp.pixel = pixel_from_json(k.at("pixel"), "keypoint pixel");
        const auto values = k.at("descriptor").get<std::vector<double>>();
        kp.descriptor = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
        keypoints.push_back(std::move(kp));
      }
    } else {
      fail(400, error_code::kInvalidPayload, "body needs \"keypoints\" or \"extract_from_image\": true");
    }
    for (const auto& kp : keypoints)
      if (kp.descriptor.size() != forest_->dimension)
        fail(400, error_code::kInvalidPayload, "descriptor dimension does not match the forest",
             {{"expected", forest_->dimension}, {"got", kp.descriptor.size()}});

    PoseEstimate est;
    try {
      est = calibrate_image(session->base, *forest_, keypoints, ransac, threshold);
    } catch (const EstimationFailure& e) {
      if (e.reason() == EstimationFailure::Reason::NoConsensus)
        fail(422, error_code::kNoConsensus, "RANSAC found no consensus", {{"best_inlier_count", e.best_inlier_count()},
                                                                         {"reason", e.what()}});
      fail(422, error_code::kTooFewPredictions, "too few gated predictions", e.what());
    }
    const PtzCamera cam{session->base, est.ptz};
    json out{{"session_id", session->session_id},
             {"estimate", ptz_to_json(est.ptz)},
             {"inlier_count", est.inlier_indices.size()},
             {"inlier_indices", est.inlier_indices},
             {"keypoint_count", keypoints.size()},
             {"reprojection_rmse", est.reprojection_rmse},
             {"iterations_used", est.iterations_used},
             {"overlay", overlay_to_json(render_field_overlay(cam, session->field))}};
    if (session->ground_truth)
      out["iou"] = compute_iou(PtzCamera{session->base, *session->ground_truth}, cam, session->field);
    return {200, out};
  });
}

ServiceResponse CalibService::overlay(const std::string& id, const std::map<std::string, std::string>& query) {
  return guarded([&]() -> ServiceResponse {
    auto session = find(id);
    double values[3];
    const char* names[3] = {"pan", "tilt", "focal"};
    for (int i = 0; i < 3; ++i) {
      auto it = query.find(names[i]);
      if (it == query.end()) fail(400, error_code::kInvalidParameters, std::string("missing parameter ") + names[i]);
      auto v = parse_double(it->second);
      if (!v) fail(400, error_code::kInvalidParameters, std::string("parameter ") + names[i] + " is not a finite number",
                   it->second);
      values[i] = *v;
    }
    if (values[2] <= 0.0) fail(400, error_code::kInvalidParameters, "focal must be positive", values[2]);
    const PtzParams ptz{wrap_degrees(values[0]), wrap_degrees(values[1]), values[2]};

    std::lock_guard lock(session->mutex);
    const PtzCamera cam{session->base, ptz};
    return {200,
            {{"session_id", session->session_id},
             {"ptz", ptz_to_json(ptz)},
             {"overlay", overlay_to_json(render_field_overlay(cam, session->field))}}};
  });
}

ServiceResponse CalibService::field() const { return {200, field_to_json(default_field_)}; }

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  CalibService& service;
  httplib::Server server;

  explicit Impl(CalibService& s) : service(s) {}
};

namespace {

void send(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

HttpServer::HttpServer(CalibService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;
  srv.set_payload_max_length(kMaxImageBytes / 3 * 4 + (1u << 20));
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Post("/sessions", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.create_session(req.body));
  });
  srv.Get(R"(/sessions/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.get_session(req.matches[1]));
  });
  srv.Get(R"(/sessions/([^/]+)/image)", [&svc](const httplib::Request& req, httplib::Response& res) {
    auto pgm = svc.session_image(req.matches[1]);
    if (!pgm) {
      send(res, {404, error_body(error_code::kNotFound, "no image for this session", std::string(req.matches[1]))});
      return;
    }
    res.set_content(*pgm, "image/x-portable-graymap");
  });
  srv.Post(R"(/sessions/([^/]+)/calibrate)", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.calibrate(req.matches[1], req.body));
  });
  srv.Post(R"(/sessions/([^/]+)/auto-calibrate)", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.auto_calibrate(req.matches[1], req.body));
  });
  srv.Get(R"(/sessions/([^/]+)/overlay)", [&svc](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    send(res, svc.overlay(req.matches[1], query));
  });
  srv.Get("/field", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.field()); });

  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 413   ? error_code::kPayloadTooLarge
                             : res.status == 404 ? error_code::kNotFound
                                                 : error_code::kInvalidPayload;
    res.set_content(error_body(code, httplib::status_message(res.status), req.path).dump(), "application/json");
  });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(error_body(error_code::kInternal, what).dump(), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (port == 0) {
    const int bound = srv.bind_to_any_port(host);
    if (bound <= 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!srv.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

int run_service(const ServeOptions& options) {
  FieldModel field = options.field_path ? read_field_model(*options.field_path) : standard_soccer_field();
  std::shared_ptr<const PanTiltForest> forest;
  if (options.forest_path) forest = std::make_shared<const PanTiltForest>(load_forest(*options.forest_path));
  CalibService service(std::move(field), forest, options.persist_dir);
  HttpServer server(service);
  const int port = server.bind(options.host, options.port);
  std::cerr << "listening on http://" << options.host << ':' << port << (forest ? " (forest loaded)" : "") << '\n';
  server.listen();
  return 0;
}

}  // namespace ptzcalib
