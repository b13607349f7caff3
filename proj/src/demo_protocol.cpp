#include "neurotouch/demo_protocol.hpp"

#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>

namespace neurotouch::demo {

namespace {

using nlohmann::json;

constexpr std::size_t kMaxPayload = 1 << 20;

[[noreturn]] void bad(const std::string& what) { throw ProtocolError(ErrorCode::BadMessage, what); }

double number(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) bad(std::string("missing number '") + key + "'");
  const double v = it->get<double>();
  if (!std::isfinite(v)) bad(std::string("non-finite '") + key + "'");
  return v;
}

json vec(Vec2 p) { return json::array({p.x, p.y}); }

Vec2 read_vec(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) bad("bad point");
  return {j[0].get<double>(), j[1].get<double>()};
}

json points(const std::vector<Vec2>& v) {
  auto a = json::array();
  for (Vec2 p : v) a.push_back(vec(p));
  return a;
}

}  // namespace

std::string frame_message(std::string_view json_text) {
  std::string out = std::to_string(json_text.size());
  out += ':';
  out += json_text;
  return out;
}

std::string_view unframe_message(std::string_view payload) {
  const auto colon = payload.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon > 8) {
    throw ProtocolError(ErrorCode::BadFrame, "missing length prefix");
  }
  std::size_t n = 0;
  const auto r = std::from_chars(payload.data(), payload.data() + colon, n);
  if (r.ec != std::errc() || r.ptr != payload.data() + colon) {
    throw ProtocolError(ErrorCode::BadFrame, "bad length prefix");
  }
  const std::string_view body = payload.substr(colon + 1);
  if (n > kMaxPayload || body.size() != n) throw ProtocolError(ErrorCode::BadFrame, "length prefix mismatch");
  return body;
}

ClientMessage decode_client_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError(ErrorCode::BadJson, e.what());
  }
  if (!j.is_object()) bad("message must be an object");
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) bad("missing 'type'");
  const auto& t = type->get_ref<const std::string&>();
  if (t == "hello") {
    Hello h;
    const auto v = j.find("version");
    if (v == j.end() || !v->is_number_integer()) bad("hello needs an integer version");
    h.version = v->get<int>();
    if (const auto c = j.find("client"); c != j.end()) {
      if (!c->is_string()) bad("client must be a string");
      h.client = c->get<std::string>();
    }
    return h;
  }
  if (t == "finger") {
    FingerInput f;
    f.t_ms = number(j, "t_ms");
    const auto id = j.find("id");
    if (id == j.end() || !id->is_number_integer()) bad("finger needs an integer id");
    f.id = id->get<int>();
    if (f.id < 0 || f.id > 2) bad("finger id must be 0, 1 or 2");
    f.position = {number(j, "x"), number(j, "y")};
    const auto p = j.find("pressed");
    if (p == j.end() || !p->is_boolean()) bad("finger needs a boolean 'pressed'");
    f.pressed = p->get<bool>();
    if (f.pressed && f.position.squared_norm() > 1.0 + 1e-9) bad("pressed finger outside the gel");
    return f;
  }
  if (t == "bye") return Bye{};
  bad("unknown message type '" + t + "'");
}

ClientMessage decode_client_message(std::string_view payload) { return decode_client_json(unframe_message(payload)); }

std::string encode_client_message(const ClientMessage& m) {
  json j;
  if (const auto* h = std::get_if<Hello>(&m)) {
    j = {{"type", "hello"}, {"version", h->version}};
    if (!h->client.empty()) j["client"] = h->client;
  } else if (const auto* f = std::get_if<FingerInput>(&m)) {
    j = {{"type", "finger"}, {"t_ms", f->t_ms}, {"id", f->id}, {"x", f->position.x}, {"y", f->position.y},
         {"pressed", f->pressed}};
  } else {
    j = {{"type", "bye"}};
  }
  return frame_message(j.dump());
}

std::string encode_server_hello(const ServerHello& h) {
  const json j = {{"type", "hello"},          {"version", h.version},
                  {"batch_ms", h.batch_ms},    {"gel_radius_mm", h.gel_radius_mm},
                  {"marker_count", h.marker_count}, {"rest_markers", points(h.rest_markers)}};
  return frame_message(j.dump());
}

std::string push_json(const DetectionPush& p) {
  nlohmann::ordered_json j;
  j["type"] = "detection";
  j["t_ms"] = p.t_ms;
  j["batch"] = p.batch;
  j["gesture"] = std::string(to_string(p.type));
  j["contacts"] = points(p.contacts);
  j["intensity_mm"] = p.intensity_mm;
  if (p.transform) {
    j["transform"] = {{"s", p.transform->s}, {"theta", p.transform->theta}, {"t", vec(p.transform->t)}};
  } else {
    j["transform"] = nullptr;
  }
  j["marker_stride"] = p.marker_stride;
  j["markers"] = points(p.markers);
  j["events"] = {{"positive", p.events_positive}, {"negative", p.events_negative}};
  j["resting"] = p.resting;
  j["reset"] = p.reset;
  return j.dump();
}

std::string encode_push(const DetectionPush& p) { return frame_message(push_json(p)); }

std::string encode_error(ErrorCode code, std::string_view message) {
  const json j = {{"type", "error"}, {"code", static_cast<int>(code)}, {"message", message}};
  return frame_message(j.dump());
}

DetectionPush decode_push(std::string_view payload) {
  json j;
  try {
    j = json::parse(unframe_message(payload));
  } catch (const json::parse_error& e) {
    throw ProtocolError(ErrorCode::BadJson, e.what());
  }
  try {
    if (j.at("type") != "detection") bad("not a detection");
    DetectionPush p;
    p.t_ms = j.at("t_ms").get<double>();
    p.batch = j.at("batch").get<std::uint64_t>();
    const auto type = gesture_type_from_string(j.at("gesture").get<std::string>());
    if (!type) bad("unknown gesture");
    p.type = *type;
    for (const auto& c : j.at("contacts")) p.contacts.push_back(read_vec(c));
    p.intensity_mm = j.at("intensity_mm").get<double>();
    if (const auto& tr = j.at("transform"); !tr.is_null()) {
      p.transform = PushTransform{tr.at("s").get<double>(), tr.at("theta").get<double>(), read_vec(tr.at("t"))};
    }
    p.marker_stride = j.at("marker_stride").get<std::size_t>();
    for (const auto& m : j.at("markers")) p.markers.push_back(read_vec(m));
    p.events_positive = j.at("events").at("positive").get<std::uint64_t>();
    p.events_negative = j.at("events").at("negative").get<std::uint64_t>();
    p.resting = j.at("resting").get<bool>();
    p.reset = j.at("reset").get<bool>();
    return p;
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

}  // namespace neurotouch::demo
