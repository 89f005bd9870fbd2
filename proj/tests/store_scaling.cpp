// SPDX-License-Identifier: Apache-2.0
//
// Lookup-latency scaling check: hashed access must not degrade with store
// size the way a scan would. Median per-lookup time over a fixed hot set of
// keys is compared between a 10k-user and a 1M-user store; the bound is 2x,
// far under the 100x a sequential scan would show.

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "nbo/clock.hpp"
#include "nbo/feature_store.hpp"
#include "nbo/generators.hpp"
#include "nbo/rng.hpp"

using namespace nbo;

namespace {

FeatureSpec minimal_spec() {
  FeatureSpec spec;
  spec.blocks = {TemporalCountBlock{"views", "view", 3600 * 1000, {1}}};
  spec.lstm_input = {LstmInputPart{LstmInputPart::Kind::numeric_price,
                                   EventAttr::type, 0, 1.0}};
  spec.validate();
  return spec;
}

FeatureStore populate(size_t n_users, const FeatureSpec& spec,
                      std::shared_ptr<const LstmWeights> weights) {
  FeatureStore store(spec, weights, 4);
  for (size_t i = 0; i < n_users; ++i) {
    UserRecord r = cold_record("user_" + std::to_string(i), spec, *weights);
    r.last_update = static_cast<int64_t>(i);
    store.put(std::move(r));
  }
  return store;
}

// Median nanoseconds per find() over `rounds` passes of a hot key set.
double median_lookup_ns(const FeatureStore& store,
                        const std::vector<std::string>& keys, int rounds) {
  std::vector<double> per_pass;
  uint64_t sink = 0;
  for (int r = 0; r < rounds; ++r) {
    const int64_t t0 = now_us();
    for (const auto& k : keys) {
      auto rec = store.find(k);
      if (rec) sink += static_cast<uint64_t>(rec->last_update);
    }
    const int64_t t1 = now_us();
    per_pass.push_back(1000.0 * static_cast<double>(t1 - t0) /
                       static_cast<double>(keys.size()));
  }
  std::sort(per_pass.begin(), per_pass.end());
  if (sink == 0xdeadbeef) std::puts("");  // keep the loads alive
  return per_pass[per_pass.size() / 2];
}

}  // namespace

int main() {
  const auto spec = minimal_spec();
  const auto weights = std::make_shared<const LstmWeights>(
      generate_lstm_weights(1, 1, spec.lstm_input_dim()));

  constexpr size_t kSmall = 10'000;
  constexpr size_t kLarge = 1'000'000;
  const auto small_store = populate(kSmall, spec, weights);
  const auto large_store = populate(kLarge, spec, weights);

  Rng rng(5);
  std::vector<std::string> keys;
  for (int i = 0; i < 2000; ++i)
    keys.push_back("user_" + std::to_string(rng.index(kSmall)));

  // warm both stores, then measure
  (void)median_lookup_ns(small_store, keys, 2);
  (void)median_lookup_ns(large_store, keys, 2);
  const double small_ns = median_lookup_ns(small_store, keys, 15);
  const double large_ns = median_lookup_ns(large_store, keys, 15);

  const double ratio = large_ns / small_ns;
  std::printf(
      "median lookup: %.1f ns at %zu users, %.1f ns at %zu users "
      "(ratio %.2f)\n",
      small_ns, kSmall, large_ns, kLarge, ratio);
  if (ratio > 2.0) {
    std::printf("FAIL: lookup latency grew by more than 2x with store size\n");
    return 1;
  }
  std::printf("PASS: lookup latency independent of store size (within 2x)\n");
  return 0;
}
