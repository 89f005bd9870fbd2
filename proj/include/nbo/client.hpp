// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "nbo/net.hpp"
#include "nbo/wire.hpp"

namespace nbo {

/// Blocking protocol client over one connection. Not thread-safe; the bench
/// opens one per connection thread.
class Client {
public:
  Client(const std::string& host, uint16_t port);

  /// Closed-loop request/response helpers.
  RecommendResponse recommend(uint64_t req_id, const std::string& user_id);
  RecommendResponse recommend(uint64_t req_id, const std::string& user_id,
                              const Event& event);
  Ack feature_update(uint64_t req_id, const std::string& user_id,
                     const Event& event);
  nlohmann::json stats(uint64_t req_id);

  /// Open-loop: fire a frame without waiting. Pair with read_message().
  void send(const Request& req);
  void send_raw(std::string_view body);

  using Message = std::variant<RecommendResponse, Ack, ErrorMessage,
                               nlohmann::json /* stats */>;

  /// Read one response frame; throws IoError on EOF/connection loss.
  Message read_message();

  void close() { sock_.close(); }

private:
  nlohmann::json read_json();

  Socket sock_;
};

}  // namespace nbo
