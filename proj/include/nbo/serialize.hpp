// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "nbo/errors.hpp"

namespace nbo {

/// Little-endian append-only byte buffer. Doubles are written as their raw
/// IEEE-754 bits, so round-trips are bit-exact and output is deterministic.
class ByteWriter {
public:
  void u8(uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(uint32_t v) { raw(&v, sizeof v); }
  void u64(uint64_t v) { raw(&v, sizeof v); }
  void i64(int64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    buf_.append(s.data(), s.size());
  }
  void bytes(std::string_view s) { buf_.append(s.data(), s.size()); }

  const std::string& data() const { return buf_; }
  std::string take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

private:
  void raw(const void* p, size_t n) {
    buf_.append(static_cast<const char*>(p), n);
  }
  std::string buf_;
};

/// Cursor over a byte buffer; throws IoError on truncation.
class ByteReader {
public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  uint8_t u8() { return static_cast<uint8_t>(take(1)[0]); }
  uint32_t u32() { return scalar<uint32_t>(); }
  uint64_t u64() { return scalar<uint64_t>(); }
  int64_t i64() { return scalar<int64_t>(); }
  double f64() { return scalar<double>(); }
  std::string str() {
    const uint32_t n = u32();
    auto s = take(n);
    return std::string(s);
  }

  size_t remaining() const { return data_.size() - pos_; }
  size_t position() const { return pos_; }

private:
  template <typename T>
  T scalar() {
    T v;
    auto s = take(sizeof(T));
    std::memcpy(&v, s.data(), sizeof(T));
    return v;
  }
  std::string_view take(size_t n) {
    if (pos_ + n > data_.size())
      throw IoError("truncated data: need " + std::to_string(n) +
                    " bytes at offset " + std::to_string(pos_));
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string_view data_;
  size_t pos_ = 0;
};

}  // namespace nbo
