#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "neurotouch/core.hpp"

namespace neurotouch::demo {

inline constexpr int kProtocolVersion = 1;

/// WebSocket close codes (private range) sent when a session is terminated.
enum class ErrorCode : std::uint16_t {
  BadFrame = 4000,           // length prefix missing or wrong
  BadJson = 4001,            // payload is not JSON
  BadMessage = 4002,         // JSON does not match the schema
  VersionMismatch = 4003,
  HandshakeRequired = 4004,  // first message was not hello
  ClientTooSlow = 4005,      // detection backlog exceeded
};

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// `<decimal byte length>:<json>`
std::string frame_message(std::string_view json);
/// Returns the JSON text, throws ProtocolError(BadFrame).
std::string_view unframe_message(std::string_view payload);

struct Hello {
  int version = kProtocolVersion;
  std::string client;
};

/// Positions are normalized gel coordinates: origin at the gel center, unit = gel radius,
/// x to the right, y up.
struct FingerInput {
  double t_ms = 0.0;
  int id = 0;
  Vec2 position;
  bool pressed = false;

  bool operator==(const FingerInput&) const = default;
};

struct Bye {};

using ClientMessage = std::variant<Hello, FingerInput, Bye>;

/// Decodes one framed client payload. Throws ProtocolError.
ClientMessage decode_client_message(std::string_view payload);
/// Decodes the unframed JSON object form (trace files use this).
ClientMessage decode_client_json(std::string_view json);
std::string encode_client_message(const ClientMessage& m);  // framed

struct ServerHello {
  int version = kProtocolVersion;
  double batch_ms = 10.0;
  double gel_radius_mm = 30.0;
  std::size_t marker_count = 0;
  std::vector<Vec2> rest_markers;  // normalized
};

struct PushTransform {
  double s = 1.0;
  double theta = 0.0;  // radians, counterclockwise positive
  Vec2 t;              // normalized
};

struct DetectionPush {
  double t_ms = 0.0;  // session time at the batch end
  std::uint64_t batch = 0;
  GestureType type = GestureType::NoGesture;
  std::vector<Vec2> contacts;  // normalized
  double intensity_mm = 0.0;
  std::optional<PushTransform> transform;
  std::size_t marker_stride = 0;  // 0: snapshot omitted
  std::vector<Vec2> markers;      // every marker_stride-th marker, normalized
  std::uint64_t events_positive = 0;
  std::uint64_t events_negative = 0;
  bool resting = false;
  bool reset = false;
};

std::string encode_server_hello(const ServerHello& h);  // framed
std::string encode_push(const DetectionPush& p);        // framed
std::string encode_error(ErrorCode code, std::string_view message);
std::string push_json(const DetectionPush& p);          // unframed, one line
DetectionPush decode_push(std::string_view payload);    // framed

}  // namespace neurotouch::demo
