// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>

#include "nbo/ensemble.hpp"
#include "nbo/feature_store.hpp"
#include "nbo/gbdt.hpp"
#include "nbo/lstm.hpp"

namespace nbo {

/// Everything the serving layer needs: both models, the calibrated blend,
/// and the populated user store.
struct Engine {
  std::shared_ptr<const LstmWeights> lstm;
  std::shared_ptr<const TreeEnsemble> gbdt;
  EnsembleModel ensemble;
  std::unique_ptr<FeatureStore> store;
};

/// Serialize the engine to `path`. Users are written in sorted order and
/// doubles as raw bits, so identical engines produce identical bytes. The
/// file ends with an FNV-1a checksum over everything before it.
void save_snapshot(const Engine& engine, const std::filesystem::path& path);
std::string snapshot_bytes(const Engine& engine);

/// Load and verify a snapshot. Throws IoError on truncation or checksum
/// mismatch, ParseError on malformed embedded sections.
Engine load_snapshot(const std::filesystem::path& path, size_t partitions);
Engine engine_from_snapshot_bytes(std::string_view bytes, size_t partitions);

}  // namespace nbo
