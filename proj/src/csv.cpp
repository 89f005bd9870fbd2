// SPDX-License-Identifier: Apache-2.0
#include "nbo/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "nbo/errors.hpp"

namespace nbo {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(size_t line_no, const std::string& what) {
  throw ParseError("transactions line " + std::to_string(line_no) + ": " +
                   what);
}

}  // namespace

std::vector<Transaction> read_transactions(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("transactions: cannot open " + path.string());

  std::string line;
  size_t line_no = 0;
  if (!std::getline(in, line)) fail(1, "missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTransactionHeader)
    fail(1, "header must be exactly '" + std::string(kTransactionHeader) +
                "'");

  std::vector<Transaction> txs;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 6) fail(line_no, "expected 6 fields, got " +
                                         std::to_string(f.size()));
    Transaction tx;
    auto [p, ec] =
        std::from_chars(f[0].data(), f[0].data() + f[0].size(), tx.event.ts_ms);
    if (ec != std::errc{} || p != f[0].data() + f[0].size())
      fail(line_no, "bad ts_ms '" + std::string(f[0]) + "'");
    if (f[1].empty()) fail(line_no, "empty user_id");
    tx.user_id = std::string(f[1]);
    tx.event.type = std::string(f[2]);
    tx.event.item = std::string(f[3]);
    tx.event.category = std::string(f[4]);
    if (f[5].empty()) {
      tx.event.price = 0.0;
    } else {
      try {
        size_t used = 0;
        tx.event.price = std::stod(std::string(f[5]), &used);
        if (used != f[5].size()) throw std::invalid_argument("trailing junk");
      } catch (const std::exception&) {
        fail(line_no, "bad price '" + std::string(f[5]) + "'");
      }
    }
    txs.push_back(std::move(tx));
  }
  return txs;
}

void write_transactions(const std::vector<Transaction>& txs,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("transactions: cannot write " + path.string());
  out << kTransactionHeader << '\n';
  char price[32];
  for (const Transaction& tx : txs) {
    out << tx.event.ts_ms << ',' << tx.user_id << ',' << tx.event.type << ','
        << tx.event.item << ',' << tx.event.category << ',';
    if (tx.event.price != 0.0) {
      std::snprintf(price, sizeof price, "%.2f", tx.event.price);
      out << price;
    }
    out << '\n';
  }
  if (!out) throw IoError("transactions: short write to " + path.string());
}

}  // namespace nbo
