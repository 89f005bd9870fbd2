// SPDX-License-Identifier: Apache-2.0
#include "nbo/wire.hpp"

#include <nlohmann/json.hpp>

#include "nbo/errors.hpp"

namespace nbo {

std::string encode_frame(std::string_view body) {
  if (body.size() > kMaxFrameBytes)
    throw ParseError("frame body of " + std::to_string(body.size()) +
                     " bytes exceeds the 1 MiB limit");
  const uint32_t len = static_cast<uint32_t>(body.size());
  std::string out;
  out.reserve(4 + body.size());
  out.push_back(static_cast<char>((len >> 24) & 0xff));
  out.push_back(static_cast<char>((len >> 16) & 0xff));
  out.push_back(static_cast<char>((len >> 8) & 0xff));
  out.push_back(static_cast<char>(len & 0xff));
  out.append(body);
  return out;
}

uint32_t decode_frame_length(const std::array<uint8_t, 4>& prefix) {
  const uint32_t len = (static_cast<uint32_t>(prefix[0]) << 24) |
                       (static_cast<uint32_t>(prefix[1]) << 16) |
                       (static_cast<uint32_t>(prefix[2]) << 8) |
                       static_cast<uint32_t>(prefix[3]);
  if (len == 0) throw ParseError("empty frame");
  if (len > kMaxFrameBytes)
    throw ParseError("frame of " + std::to_string(len) +
                     " bytes exceeds the 1 MiB limit");
  return len;
}

std::string_view kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::recommend: return "recommend";
    case MsgKind::feature_update: return "feature_update";
    case MsgKind::recommend_response: return "recommend_response";
    case MsgKind::ack: return "ack";
    case MsgKind::error: return "error";
    case MsgKind::stats: return "stats";
  }
  return "?";
}

MsgKind kind_from_name(std::string_view name) {
  if (name == "recommend") return MsgKind::recommend;
  if (name == "feature_update") return MsgKind::feature_update;
  if (name == "recommend_response") return MsgKind::recommend_response;
  if (name == "ack") return MsgKind::ack;
  if (name == "error") return MsgKind::error;
  if (name == "stats") return MsgKind::stats;
  throw ParseError("unknown message kind '" + std::string(name) + "'");
}

namespace {

nlohmann::json event_to_json(const Event& e) {
  return nlohmann::json{{"ts", e.ts_ms},
                        {"type", e.type},
                        {"item", e.item},
                        {"category", e.category},
                        {"price", e.price}};
}

Event event_from_json(const nlohmann::json& j) {
  Event e;
  e.ts_ms = j.at("ts").get<int64_t>();
  e.type = j.at("type").get<std::string>();
  e.item = j.at("item").get<std::string>();
  e.category = j.at("category").get<std::string>();
  e.price = j.at("price").get<double>();
  return e;
}

nlohmann::json timing_to_json(const TimingBreakdown& t) {
  nlohmann::json j;
  for (size_t i = 0; i < t.t.size(); ++i)
    j["T" + std::to_string(i + 1)] = t.t[i];
  j["rl_total"] = t.rl_total;
  return j;
}

TimingBreakdown timing_from_json(const nlohmann::json& j) {
  TimingBreakdown t;
  for (size_t i = 0; i < t.t.size(); ++i)
    t.t[i] = j.value("T" + std::to_string(i + 1), int64_t{0});
  t.rl_total = j.value("rl_total", int64_t{0});
  return t;
}

}  // namespace

nlohmann::json request_to_json(const Request& r) {
  nlohmann::json j{{"kind", kind_name(r.kind)},
                   {"req_id", r.req_id},
                   {"user_id", r.user_id}};
  if (r.event) j["event"] = event_to_json(*r.event);
  return j;
}

Request request_from_json(const nlohmann::json& j) {
  Request r;
  try {
    r.kind = kind_from_name(j.at("kind").get<std::string>());
    r.req_id = j.at("req_id").get<uint64_t>();
    r.user_id = j.value("user_id", std::string{});
    if (j.contains("event")) r.event = event_from_json(j.at("event"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("request: ") + e.what());
  }
  if (r.kind == MsgKind::feature_update && !r.event)
    throw ParseError("feature_update requires an event payload");
  if ((r.kind == MsgKind::recommend || r.kind == MsgKind::feature_update) &&
      r.user_id.empty())
    throw ParseError("request requires a user_id");
  return r;
}

nlohmann::json recommend_response_to_json(const RecommendResponse& r) {
  return nlohmann::json{{"kind", kind_name(MsgKind::recommend_response)},
                        {"req_id", r.req_id},
                        {"score", r.score},
                        {"p_gbdt", r.p_gbdt},
                        {"p_lstm", r.p_lstm},
                        {"decision", r.decision},
                        {"cold_start", r.cold_start},
                        {"timing", timing_to_json(r.timing)}};
}

RecommendResponse recommend_response_from_json(const nlohmann::json& j) {
  RecommendResponse r;
  try {
    r.req_id = j.at("req_id").get<uint64_t>();
    r.score = j.at("score").get<double>();
    r.p_gbdt = j.at("p_gbdt").get<double>();
    r.p_lstm = j.at("p_lstm").get<double>();
    r.decision = j.at("decision").get<bool>();
    r.cold_start = j.at("cold_start").get<bool>();
    r.timing = timing_from_json(j.at("timing"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("recommend_response: ") + e.what());
  }
  return r;
}

nlohmann::json ack_to_json(const Ack& a) {
  nlohmann::json timing{{"T1", a.timing.t[0]},
                        {"T3", a.timing.t[2]},
                        {"T4", a.timing.t[3]},
                        {"T5", a.timing.t[4]}};
  nlohmann::json j{{"kind", kind_name(MsgKind::ack)},
                   {"req_id", a.req_id},
                   {"ok", a.ok},
                   {"process_time", a.process_time},
                   {"timing", std::move(timing)}};
  if (!a.ok) j["reason"] = a.reason;
  return j;
}

Ack ack_from_json(const nlohmann::json& j) {
  Ack a;
  try {
    a.req_id = j.at("req_id").get<uint64_t>();
    a.ok = j.at("ok").get<bool>();
    a.process_time = j.at("process_time").get<int64_t>();
    a.reason = j.value("reason", std::string{});
    const auto& t = j.at("timing");
    a.timing.t[0] = t.value("T1", int64_t{0});
    a.timing.t[2] = t.value("T3", int64_t{0});
    a.timing.t[3] = t.value("T4", int64_t{0});
    a.timing.t[4] = t.value("T5", int64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ack: ") + e.what());
  }
  return a;
}

nlohmann::json error_to_json(const ErrorMessage& e) {
  return nlohmann::json{{"kind", kind_name(MsgKind::error)},
                        {"req_id", e.req_id},
                        {"message", e.message}};
}

ErrorMessage error_from_json(const nlohmann::json& j) {
  ErrorMessage e;
  try {
    e.req_id = j.at("req_id").get<uint64_t>();
    e.message = j.at("message").get<std::string>();
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("error message: ") + ex.what());
  }
  return e;
}

nlohmann::json parse_body(std::string_view body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed frame body: ") + e.what());
  }
}

}  // namespace nbo
