// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace nbo {

inline constexpr uint64_t kFnvOffsetBasis = 14695981039346656037ull;
inline constexpr uint64_t kFnvPrime = 1099511628211ull;

/// FNV-1a 64-bit over raw bytes. Stable across platforms and runs; this is
/// the hash behind categorical encoding, user partitioning and snapshot
/// checksums, so it is part of the file and wire contracts.
constexpr uint64_t fnv1a64(std::string_view bytes,
                           uint64_t seed = kFnvOffsetBasis) {
  uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= static_cast<uint64_t>(b);
    h *= kFnvPrime;
  }
  return h;
}

/// Hash a categorical value into one of `buckets` slots. Requires buckets >= 2.
uint32_t encode_categorical(std::string_view value, uint32_t buckets);

}  // namespace nbo
