// SPDX-License-Identifier: Apache-2.0
#include "nbo/snapshot.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "nbo/errors.hpp"
#include "nbo/hashing.hpp"
#include "nbo/serialize.hpp"

namespace nbo {

namespace {
constexpr char kMagic[8] = {'N', 'B', 'O', 'S', 'N', 'A', 'P', '\x01'};
}

std::string snapshot_bytes(const Engine& engine) {
  ByteWriter w;
  w.bytes(std::string_view(kMagic, sizeof kMagic));
  w.str(feature_spec_to_json(engine.store->spec()).dump());
  w.str(lstm_weights_to_json(*engine.lstm).dump());
  w.str(gbdt_to_json(*engine.gbdt).dump());
  w.str(ensemble_to_json(engine.ensemble).dump());
  w.u64(engine.store->size());
  engine.store->for_each_sorted(
      [&](const UserRecord& r) { write_user_record(w, r); });
  const uint64_t checksum = fnv1a64(w.data());
  w.u64(checksum);
  return w.take();
}

void save_snapshot(const Engine& engine, const std::filesystem::path& path) {
  const std::string bytes = snapshot_bytes(engine);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("snapshot: cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("snapshot: short write to " + path.string());
}

Engine engine_from_snapshot_bytes(std::string_view bytes, size_t partitions) {
  if (bytes.size() < sizeof kMagic + sizeof(uint64_t))
    throw IoError("snapshot: file too short");
  if (bytes.substr(0, sizeof kMagic) != std::string_view(kMagic, sizeof kMagic))
    throw IoError("snapshot: bad magic");

  const size_t body_len = bytes.size() - sizeof(uint64_t);
  uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body_len, sizeof stored);
  if (fnv1a64(bytes.substr(0, body_len)) != stored)
    throw IoError("snapshot: checksum mismatch (corrupt or truncated file)");

  ByteReader r(bytes.substr(sizeof kMagic, body_len - sizeof kMagic));
  Engine engine;
  FeatureSpec spec;
  try {
    spec = feature_spec_from_json(nlohmann::json::parse(r.str()));
    engine.lstm = std::make_shared<const LstmWeights>(
        lstm_weights_from_json(nlohmann::json::parse(r.str())));
    engine.gbdt = std::make_shared<const TreeEnsemble>(
        gbdt_from_json(nlohmann::json::parse(r.str())));
    engine.ensemble = ensemble_from_json(nlohmann::json::parse(r.str()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("snapshot: embedded section: ") + e.what());
  }

  engine.store =
      std::make_unique<FeatureStore>(spec, engine.lstm, partitions);
  const uint64_t users = r.u64();
  for (uint64_t i = 0; i < users; ++i)
    engine.store->put(read_user_record(r, engine.store->spec()));
  if (r.remaining() != 0)
    throw IoError("snapshot: trailing bytes after last record");
  return engine;
}

Engine load_snapshot(const std::filesystem::path& path, size_t partitions) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("snapshot: cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return engine_from_snapshot_bytes(bytes, partitions);
}

}  // namespace nbo
