// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nbo/snapshot.hpp"

namespace nbo {

struct StartupTiming {
  int64_t feature_build_ms = 0;  // pass 1 + pass 2
  int64_t warmup_ms = 0;         // model load + per-user state replay + calibration
  int64_t total_ms() const { return feature_build_ms + warmup_ms; }
};

struct StartupResult {
  StartupTiming timing;
  size_t users = 0;
  size_t events = 0;
  bool calibrated = false;
  std::vector<std::string> warnings;
};

/// The full batch pipeline: read transactions, two-pass feature build,
/// per-user LSTM state replay, blend/threshold calibration, snapshot write.
/// Deterministic: identical inputs give a byte-identical snapshot.
StartupResult run_startup(const std::filesystem::path& transactions_path,
                          const std::filesystem::path& spec_path,
                          const std::filesystem::path& lstm_path,
                          const std::filesystem::path& gbdt_path,
                          const std::filesystem::path& snapshot_out,
                          size_t partitions = 1);

/// Same pipeline on in-memory inputs; returns the engine instead of writing.
Engine build_engine(const std::vector<Transaction>& transactions,
                    FeatureSpec spec, LstmWeights lstm, TreeEnsemble gbdt,
                    size_t partitions, StartupResult* result = nullptr);

}  // namespace nbo
