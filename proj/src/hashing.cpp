// SPDX-License-Identifier: Apache-2.0
#include "nbo/hashing.hpp"

#include "nbo/errors.hpp"

namespace nbo {

uint32_t encode_categorical(std::string_view value, uint32_t buckets) {
  if (buckets < 2)
    throw DomainError("encode_categorical: bucket count must be >= 2");
  return static_cast<uint32_t>(fnv1a64(value) % buckets);
}

}  // namespace nbo
