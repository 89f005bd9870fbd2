// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "nbo/event.hpp"

namespace nbo {

/// Transaction CSV header. Fields must not contain commas; price is empty
/// for non-order events.
inline constexpr const char* kTransactionHeader =
    "ts_ms,user_id,event_type,item_id,category,price";

/// Strict reader: header must match exactly; errors carry line numbers.
std::vector<Transaction> read_transactions(const std::filesystem::path& path);

void write_transactions(const std::vector<Transaction>& txs,
                        const std::filesystem::path& path);

}  // namespace nbo
