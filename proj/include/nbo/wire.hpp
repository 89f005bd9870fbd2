// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "nbo/event.hpp"

namespace nbo {

/// Frames are a 4-byte big-endian unsigned length followed by a UTF-8 JSON
/// body. Frames longer than 1 MiB are a protocol violation and close the
/// connection.
inline constexpr uint32_t kMaxFrameBytes = 1u << 20;

std::string encode_frame(std::string_view body);

/// Parse the 4-byte prefix. Throws ParseError if it announces an oversize
/// or empty frame.
uint32_t decode_frame_length(const std::array<uint8_t, 4>& prefix);

enum class MsgKind {
  recommend,
  feature_update,
  recommend_response,
  ack,
  error,
  stats,
};

std::string_view kind_name(MsgKind k);
MsgKind kind_from_name(std::string_view name);  // throws ParseError

/// Per-stage durations in microseconds. Stage indices follow the interface
/// diagram: T1 frame receive+parse, T3 update enqueue wait, T4 feature
/// update compute, T5 store write, T6 recommend-path routing, T7 feature
/// fetch + input preparation, T8 dispatch to the inference queue, T9 queue
/// wait, T10 model inference, T11 response serialization. Unused stages
/// report 0. rl_total = T1+T6+T7+T8+T9+T10+T11.
struct TimingBreakdown {
  std::array<int64_t, 11> t{};  // t[0] = T1 ... t[10] = T11
  int64_t rl_total = 0;

  int64_t recommend_sum() const {
    return t[0] + t[5] + t[6] + t[7] + t[8] + t[9] + t[10];
  }
  int64_t process_time() const { return t[0] + t[2] + t[3] + t[4]; }
};

struct Request {
  MsgKind kind = MsgKind::recommend;
  uint64_t req_id = 0;
  std::string user_id;
  std::optional<Event> event;
};

struct RecommendResponse {
  uint64_t req_id = 0;
  double score = 0.0;
  double p_gbdt = 0.0;
  double p_lstm = 0.0;
  bool decision = false;
  bool cold_start = false;
  TimingBreakdown timing;
};

struct Ack {
  uint64_t req_id = 0;
  bool ok = true;
  int64_t process_time = 0;  // microseconds, = T1+T3+T4+T5
  std::string reason;        // present only when !ok
  TimingBreakdown timing;    // only T1, T3, T4, T5 are populated
};

struct ErrorMessage {
  uint64_t req_id = 0;  // 0 when the request id could not be recovered
  std::string message;
};

nlohmann::json request_to_json(const Request& r);
Request request_from_json(const nlohmann::json& j);

nlohmann::json recommend_response_to_json(const RecommendResponse& r);
RecommendResponse recommend_response_from_json(const nlohmann::json& j);

nlohmann::json ack_to_json(const Ack& a);
Ack ack_from_json(const nlohmann::json& j);

nlohmann::json error_to_json(const ErrorMessage& e);
ErrorMessage error_from_json(const nlohmann::json& j);

/// Parse a frame body; throws ParseError on malformed JSON or unknown kind.
nlohmann::json parse_body(std::string_view body);

}  // namespace nbo
