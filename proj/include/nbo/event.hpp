// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

namespace nbo {

/// One user action. `price` is 0 for non-order events.
struct Event {
  int64_t ts_ms = 0;
  std::string type;      // "view" | "order" | "impression" | free-form
  std::string item;
  std::string category;
  double price = 0.0;

  bool operator==(const Event&) const = default;
};

struct Transaction {
  std::string user_id;
  Event event;

  bool operator==(const Transaction&) const = default;
};

}  // namespace nbo
