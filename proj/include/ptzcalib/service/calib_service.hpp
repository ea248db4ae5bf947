#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "json.hpp"
#include "ptzcalib/calib/two_point.hpp"
#include "ptzcalib/core/field_model.hpp"
#include "ptzcalib/forest/pan_tilt_forest.hpp"
#include "ptzcalib/synth/image.hpp"

namespace ptzcalib {

// Error codes carried in {"code", "message", "detail"} bodies.
namespace error_code {
inline constexpr const char* kInvalidPayload = "invalid_payload";
inline constexpr const char* kInvalidParameters = "invalid_parameters";
inline constexpr const char* kSessionNotFound = "session_not_found";
inline constexpr const char* kNotFound = "not_found";
inline constexpr const char* kUnknownKeyPoint = "unknown_key_point";
inline constexpr const char* kDegenerateConfiguration = "degenerate_configuration";
inline constexpr const char* kSolverFailure = "solver_failure";
inline constexpr const char* kNoForest = "no_forest";
inline constexpr const char* kTooFewPredictions = "too_few_predictions";
inline constexpr const char* kNoConsensus = "no_consensus";
inline constexpr const char* kPayloadTooLarge = "payload_too_large";
inline constexpr const char* kInternal = "internal_error";
}  // namespace error_code

inline constexpr std::size_t kMaxImageBytes = 16u * 1024u * 1024u;

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

struct AnnotationPair {
  std::string key_point;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

struct SessionState {
  std::string session_id;
  CameraBase base;
  FieldModel field;
  std::optional<GrayImage> image;
  std::string image_source;  // "none", "upload" or "synthetic"
  std::optional<PtzParams> ground_truth;
  std::vector<AnnotationPair> annotation;
  std::optional<CalibSolution> last_solution;
  std::mutex mutex;
};

std::string base64_decode(std::string_view text);

/// Request handlers, usable without a socket. Every method returns the HTTP
/// status and JSON body the server sends.
class CalibService {
 public:
  explicit CalibService(FieldModel default_field, std::shared_ptr<const PanTiltForest> forest = nullptr,
                        std::optional<std::filesystem::path> persist_dir = std::nullopt);

  ServiceResponse create_session(const std::string& body);
  ServiceResponse get_session(const std::string& id);
  ServiceResponse calibrate(const std::string& id, const std::string& body);
  ServiceResponse auto_calibrate(const std::string& id, const std::string& body);
  ServiceResponse overlay(const std::string& id, const std::map<std::string, std::string>& query);
  ServiceResponse field() const;
  /// PGM bytes of the session image, nullopt when there is none.
  std::optional<std::string> session_image(const std::string& id);

  bool has_forest() const { return forest_ != nullptr; }

 private:
  std::shared_ptr<SessionState> find(const std::string& id);
  void persist(const SessionState& session) const;

  FieldModel default_field_;
  std::shared_ptr<const PanTiltForest> forest_;
  std::optional<std::filesystem::path> persist_dir_;

  std::shared_mutex sessions_mutex_;
  std::unordered_map<std::string, std::shared_ptr<SessionState>> sessions_;
  unsigned long next_id_ = 1;
};

nlohmann::json error_body(const std::string& code, const std::string& message, const nlohmann::json& detail = {});

/// HTTP/1.1 front end over a CalibService.
class HttpServer {
 public:
  explicit HttpServer(CalibService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  /// Throws Error when binding fails.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> forest_path;
  std::optional<std::filesystem::path> field_path;
  std::optional<std::filesystem::path> persist_dir;
};

/// Loads the field and forest, then serves until the process ends.
int run_service(const ServeOptions& options);

}  // namespace ptzcalib
