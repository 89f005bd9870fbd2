// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "nbo/event.hpp"
#include "nbo/feature_spec.hpp"
#include "nbo/lstm.hpp"

namespace nbo {

/// Cumulative state of one temporal counter: timestamps still inside the
/// window plus the running count. count == stamps.size() after eviction.
struct TemporalState {
  std::deque<int64_t> stamps;
  uint64_t count = 0;

  bool operator==(const TemporalState&) const = default;
};

struct FavoriteState {
  std::map<uint32_t, uint64_t> counts;  // bucket -> occurrences

  bool operator==(const FavoriteState&) const = default;
};

struct IdentityState {
  bool seen = false;
  uint32_t bucket = 0;

  bool operator==(const IdentityState&) const = default;
};

using BlockState = std::variant<TemporalState, FavoriteState, IdentityState>;

/// Per-user cumulative feature state, one entry per spec block.
struct FeatureDictionary {
  std::vector<BlockState> blocks;

  bool operator==(const FeatureDictionary&) const = default;
};

/// Sparse concatenated one-hot vector: sorted set indices (one per block),
/// all set values are 1.0.
struct OneHotVector {
  std::vector<uint32_t> indices;
  uint32_t length = 0;

  std::vector<double> densify() const;
  bool operator==(const OneHotVector&) const = default;
};

struct UserRecord {
  std::string user_id;
  FeatureDictionary dict;
  OneHotVector onehot;  // cache; always equals vectorize(dict, spec)
  LstmState lstm;
  int64_t last_update = 0;  // epoch ms of the last applied event

  bool operator==(const UserRecord&) const = default;
};

FeatureDictionary empty_dictionary(const FeatureSpec& spec);

/// Drop window entries at or before as_of - window. Never increases counts.
void evict_windows(FeatureDictionary& dict, const FeatureSpec& spec,
                   int64_t as_of);

/// Fold one event into the dictionary (no eviction; callers evict first).
void apply_to_dictionary(FeatureDictionary& dict, const FeatureSpec& spec,
                         const Event& e);

/// One-hot encode the dictionary per the spec's block layout.
OneHotVector vectorize(const FeatureDictionary& dict, const FeatureSpec& spec);

UserRecord cold_record(std::string user_id, const FeatureSpec& spec,
                       const LstmWeights& w);

/// Apply one event: evict windows at the event time, fold the event in,
/// refresh the one-hot cache, advance the LSTM state one step and stamp
/// last_update. Value semantics; throws StaleEventError if the event is
/// older than record.last_update.
UserRecord update_features(const UserRecord& record, const Event& e,
                           const FeatureSpec& spec, const LstmWeights& w);

/// First batch pass: per-user cumulative feature values from a clock-ordered
/// stream, windows filtered relative to as_of. Throws ParseError naming the
/// offending line on an out-of-order timestamp.
std::map<std::string, FeatureDictionary> build_pass1(
    const std::vector<Transaction>& transactions, const FeatureSpec& spec,
    int64_t as_of);

/// Second batch pass: one-hot vectors from the pass-1 dictionaries.
std::map<std::string, OneHotVector> build_pass2(
    const std::map<std::string, FeatureDictionary>& dicts,
    const FeatureSpec& spec);

/// In-memory user-partitioned store. Writes for one user always come from
/// the one worker owning its partition; each mutation installs a fresh
/// immutable record, so readers see either the old or the new version and
/// never a torn one.
class FeatureStore {
public:
  FeatureStore(FeatureSpec spec, std::shared_ptr<const LstmWeights> weights,
               size_t partitions);

  const FeatureSpec& spec() const { return spec_; }
  const LstmWeights& weights() const { return *weights_; }
  std::shared_ptr<const LstmWeights> weights_ptr() const { return weights_; }
  size_t partition_count() const { return parts_.size(); }

  size_t partition_of(std::string_view user_id) const;

  /// O(1) expected lookup. Returns nullptr for unknown users; never inserts.
  std::shared_ptr<const UserRecord> find(std::string_view user_id) const;

  /// Copy of the stored record, or the cold-start default for unknown users.
  UserRecord get_or_cold(std::string_view user_id) const;

  /// Insert or replace a record (used by batch build and restore).
  void put(UserRecord record);

  /// update_features on the stored (or cold) record, then swap it in.
  /// Returns the new record. Throws StaleEventError on late events.
  std::shared_ptr<const UserRecord> apply_event(const std::string& user_id,
                                                const Event& e);

  /// Evict every user's windows at as_of and refresh the one-hot caches,
  /// so that stored values are the ones a batch build at as_of would give.
  void settle_all(int64_t as_of);

  size_t size() const;
  std::vector<std::string> user_ids_sorted() const;

  /// For each user in sorted order, invoke fn on the current record.
  void for_each_sorted(
      const std::function<void(const UserRecord&)>& fn) const;

  /// FNV-1a over the canonical serialized store contents. Two stores with
  /// the same observable records have the same fingerprint.
  uint64_t fingerprint() const;

private:
  struct Partition {
    mutable std::shared_mutex mu;
    std::unordered_map<std::string, std::shared_ptr<const UserRecord>> users;
  };

  FeatureSpec spec_;
  std::shared_ptr<const LstmWeights> weights_;
  std::vector<std::unique_ptr<Partition>> parts_;
};

/// Full batch build: pass 1 + pass 2 + per-user LSTM replay, settled at
/// as_of. last_update is each user's final event timestamp, matching what
/// the incremental path would have stored.
FeatureStore build_store(const std::vector<Transaction>& transactions,
                         FeatureSpec spec,
                         std::shared_ptr<const LstmWeights> weights,
                         int64_t as_of, size_t partitions);

class ByteWriter;
class ByteReader;

/// Canonical binary encoding of one record (snapshot format, also the basis
/// of FeatureStore::fingerprint).
void write_user_record(ByteWriter& w, const UserRecord& r);
UserRecord read_user_record(ByteReader& r, const FeatureSpec& spec);

}  // namespace nbo
