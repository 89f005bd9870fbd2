// SPDX-License-Identifier: Apache-2.0
#include "nbo/client.hpp"

#include "nbo/errors.hpp"

namespace nbo {

Client::Client(const std::string& host, uint16_t port)
    : sock_(Socket::connect(host, port)) {}

void Client::send(const Request& req) { send_raw(request_to_json(req).dump()); }

void Client::send_raw(std::string_view body) {
  sock_.send_all(encode_frame(body));
}

nlohmann::json Client::read_json() {
  std::array<uint8_t, 4> prefix;
  if (!sock_.recv_exact(prefix.data(), prefix.size()))
    throw IoError("connection closed by server");
  const uint32_t len = decode_frame_length(prefix);
  std::string body(len, 0);
  if (!sock_.recv_exact(body.data(), len))
    throw IoError("connection closed mid-frame");
  return parse_body(body);
}

Client::Message Client::read_message() {
  nlohmann::json j = read_json();
  const MsgKind kind = kind_from_name(j.at("kind").get<std::string>());
  switch (kind) {
    case MsgKind::recommend_response:
      return recommend_response_from_json(j);
    case MsgKind::ack:
      return ack_from_json(j);
    case MsgKind::error:
      return error_from_json(j);
    case MsgKind::stats:
      return j;
    default:
      throw ParseError("unexpected message kind from server: " +
                       std::string(kind_name(kind)));
  }
}

RecommendResponse Client::recommend(uint64_t req_id,
                                    const std::string& user_id) {
  Request req;
  req.kind = MsgKind::recommend;
  req.req_id = req_id;
  req.user_id = user_id;
  send(req);
  Message m = read_message();
  if (auto* r = std::get_if<RecommendResponse>(&m)) return std::move(*r);
  if (auto* e = std::get_if<ErrorMessage>(&m))
    throw Error("server error: " + e->message);
  throw ParseError("unexpected response to recommend");
}

RecommendResponse Client::recommend(uint64_t req_id, const std::string& user_id,
                                    const Event& event) {
  Request req;
  req.kind = MsgKind::recommend;
  req.req_id = req_id;
  req.user_id = user_id;
  req.event = event;
  send(req);
  Message m = read_message();
  if (auto* r = std::get_if<RecommendResponse>(&m)) return std::move(*r);
  if (auto* e = std::get_if<ErrorMessage>(&m))
    throw Error("server error: " + e->message);
  throw ParseError("unexpected response to recommend");
}

Ack Client::feature_update(uint64_t req_id, const std::string& user_id,
                           const Event& event) {
  Request req;
  req.kind = MsgKind::feature_update;
  req.req_id = req_id;
  req.user_id = user_id;
  req.event = event;
  send(req);
  Message m = read_message();
  if (auto* a = std::get_if<Ack>(&m)) return std::move(*a);
  if (auto* e = std::get_if<ErrorMessage>(&m))
    throw Error("server error: " + e->message);
  throw ParseError("unexpected response to feature_update");
}

nlohmann::json Client::stats(uint64_t req_id) {
  Request req;
  req.kind = MsgKind::stats;
  req.req_id = req_id;
  send(req);
  Message m = read_message();
  if (auto* j = std::get_if<nlohmann::json>(&m)) return std::move(*j);
  throw ParseError("unexpected response to stats");
}

}  // namespace nbo
