// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "nbo/event.hpp"
#include "nbo/gbdt.hpp"
#include "nbo/lstm.hpp"

namespace nbo {

struct DataGenConfig {
  uint64_t seed = 1;
  size_t n_users = 100;
  size_t n_events = 1000;
  size_t n_products = 200;
  int64_t start_ts_ms = 1600000000000;  // fixed epoch keeps output stable
  int64_t max_gap_ms = 500;
};

/// Clock-sorted synthetic transaction stream. User and product draws are
/// Zipf-skewed so that favorites and window counters get non-trivial values.
/// Deterministic per seed.
std::vector<Transaction> generate_transactions(const DataGenConfig& cfg);

/// Seeded random LSTM weights, uniform in [-0.5/sqrt(n), 0.5/sqrt(n)] so
/// gates stay away from saturation on one-hot style inputs.
LstmWeights generate_lstm_weights(uint64_t seed, size_t hidden_dim,
                                  size_t input_dim);

/// Seeded random tree ensemble over `n_features` one-hot features.
TreeEnsemble generate_gbdt(uint64_t seed, size_t n_trees, size_t depth,
                           size_t n_features);

}  // namespace nbo
