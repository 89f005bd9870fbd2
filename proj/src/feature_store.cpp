// SPDX-License-Identifier: Apache-2.0
#include "nbo/feature_store.hpp"

#include <algorithm>
#include <functional>
#include <mutex>

#include "nbo/errors.hpp"
#include "nbo/hashing.hpp"
#include "nbo/serialize.hpp"

namespace nbo {

std::vector<double> OneHotVector::densify() const {
  std::vector<double> out(length, 0.0);
  for (uint32_t i : indices) out[i] = 1.0;
  return out;
}

FeatureDictionary empty_dictionary(const FeatureSpec& spec) {
  FeatureDictionary dict;
  dict.blocks.reserve(spec.blocks.size());
  for (const auto& b : spec.blocks) {
    if (std::holds_alternative<TemporalCountBlock>(b))
      dict.blocks.emplace_back(TemporalState{});
    else if (std::holds_alternative<FavoriteBlock>(b))
      dict.blocks.emplace_back(FavoriteState{});
    else
      dict.blocks.emplace_back(IdentityState{});
  }
  return dict;
}

void evict_windows(FeatureDictionary& dict, const FeatureSpec& spec,
                   int64_t as_of) {
  for (size_t i = 0; i < spec.blocks.size(); ++i) {
    const auto* blk = std::get_if<TemporalCountBlock>(&spec.blocks[i]);
    if (!blk) continue;
    auto& st = std::get<TemporalState>(dict.blocks[i]);
    const int64_t cutoff = as_of - blk->window_ms;
    while (!st.stamps.empty() && st.stamps.front() <= cutoff) {
      st.stamps.pop_front();
      --st.count;
    }
  }
}

void apply_to_dictionary(FeatureDictionary& dict, const FeatureSpec& spec,
                         const Event& e) {
  if (dict.blocks.size() != spec.blocks.size())
    throw DimensionError("feature dictionary does not match the spec");
  for (size_t i = 0; i < spec.blocks.size(); ++i) {
    if (const auto* t = std::get_if<TemporalCountBlock>(&spec.blocks[i])) {
      if (e.type != t->event_type) continue;
      auto& st = std::get<TemporalState>(dict.blocks[i]);
      st.stamps.push_back(e.ts_ms);
      ++st.count;
    } else if (const auto* f = std::get_if<FavoriteBlock>(&spec.blocks[i])) {
      const auto value = event_attr_value(e, f->attribute);
      if (value.empty()) continue;
      auto& st = std::get<FavoriteState>(dict.blocks[i]);
      ++st.counts[encode_categorical(value, f->buckets)];
    } else {
      const auto& id = std::get<IdentityBlock>(spec.blocks[i]);
      const auto value = event_attr_value(e, id.attribute);
      if (value.empty()) continue;
      auto& st = std::get<IdentityState>(dict.blocks[i]);
      st.seen = true;
      st.bucket = encode_categorical(value, id.buckets);
    }
  }
}

namespace {

uint32_t temporal_bucket(uint64_t count, const std::vector<uint64_t>& bounds) {
  uint32_t bucket = 0;
  for (size_t i = 0; i < bounds.size(); ++i) {
    if (count >= bounds[i]) bucket = static_cast<uint32_t>(i) + 1;
  }
  return bucket;
}

}  // namespace

OneHotVector vectorize(const FeatureDictionary& dict, const FeatureSpec& spec) {
  if (dict.blocks.size() != spec.blocks.size())
    throw DimensionError("feature dictionary does not match the spec");
  OneHotVector v;
  v.length = static_cast<uint32_t>(spec.n_features());
  v.indices.reserve(spec.blocks.size());
  uint32_t offset = 0;
  for (size_t i = 0; i < spec.blocks.size(); ++i) {
    uint32_t local = 0;
    if (const auto* t = std::get_if<TemporalCountBlock>(&spec.blocks[i])) {
      local = temporal_bucket(std::get<TemporalState>(dict.blocks[i]).count,
                              t->boundaries);
    } else if (std::holds_alternative<FavoriteBlock>(spec.blocks[i])) {
      // argmax of bucket counts; the map is ordered, so keeping strict '>'
      // breaks ties toward the lowest bucket index. No data -> bucket 0.
      const auto& st = std::get<FavoriteState>(dict.blocks[i]);
      uint64_t best = 0;
      for (const auto& [bucket, count] : st.counts) {
        if (count > best) {
          best = count;
          local = bucket;
        }
      }
    } else {
      const auto& st = std::get<IdentityState>(dict.blocks[i]);
      local = st.seen ? st.bucket : 0;
    }
    v.indices.push_back(offset + local);
    offset += static_cast<uint32_t>(block_width(spec.blocks[i]));
  }
  return v;
}

UserRecord cold_record(std::string user_id, const FeatureSpec& spec,
                       const LstmWeights& w) {
  UserRecord r;
  r.user_id = std::move(user_id);
  r.dict = empty_dictionary(spec);
  r.onehot = vectorize(r.dict, spec);
  r.lstm = lstm_zero_state(w);
  r.last_update = 0;
  return r;
}

UserRecord update_features(const UserRecord& record, const Event& e,
                           const FeatureSpec& spec, const LstmWeights& w) {
  if (e.ts_ms < record.last_update)
    throw StaleEventError("stale event for user '" + record.user_id +
                          "': ts " + std::to_string(e.ts_ms) +
                          " < last update " +
                          std::to_string(record.last_update));
  UserRecord out = record;
  evict_windows(out.dict, spec, e.ts_ms);
  apply_to_dictionary(out.dict, spec, e);
  out.onehot = vectorize(out.dict, spec);
  out.lstm = lstm_step(w, record.lstm, encode_event(e, spec));
  out.last_update = e.ts_ms;
  return out;
}

std::map<std::string, FeatureDictionary> build_pass1(
    const std::vector<Transaction>& transactions, const FeatureSpec& spec,
    int64_t as_of) {
  // Direct filter construction: deliberately not the incremental path, so
  // the two can be checked against each other.
  std::map<std::string, FeatureDictionary> dicts;
  int64_t prev_ts = INT64_MIN;
  for (size_t line = 0; line < transactions.size(); ++line) {
    const Transaction& tx = transactions[line];
    if (tx.event.ts_ms < prev_ts)
      throw ParseError("transactions out of clock order at record " +
                       std::to_string(line + 1));
    prev_ts = tx.event.ts_ms;

    auto [it, inserted] = dicts.try_emplace(tx.user_id);
    if (inserted) it->second = empty_dictionary(spec);
    FeatureDictionary& dict = it->second;
    const Event& e = tx.event;
    for (size_t i = 0; i < spec.blocks.size(); ++i) {
      if (const auto* t = std::get_if<TemporalCountBlock>(&spec.blocks[i])) {
        if (e.type != t->event_type) continue;
        if (e.ts_ms <= as_of - t->window_ms) continue;  // outside the window
        auto& st = std::get<TemporalState>(dict.blocks[i]);
        st.stamps.push_back(e.ts_ms);
        ++st.count;
      } else if (const auto* f = std::get_if<FavoriteBlock>(&spec.blocks[i])) {
        const auto value = event_attr_value(e, f->attribute);
        if (value.empty()) continue;
        ++std::get<FavoriteState>(dict.blocks[i])
              .counts[encode_categorical(value, f->buckets)];
      } else {
        const auto& id = std::get<IdentityBlock>(spec.blocks[i]);
        const auto value = event_attr_value(e, id.attribute);
        if (value.empty()) continue;
        auto& st = std::get<IdentityState>(dict.blocks[i]);
        st.seen = true;
        st.bucket = encode_categorical(value, id.buckets);
      }
    }
  }
  return dicts;
}

std::map<std::string, OneHotVector> build_pass2(
    const std::map<std::string, FeatureDictionary>& dicts,
    const FeatureSpec& spec) {
  std::map<std::string, OneHotVector> out;
  for (const auto& [user, dict] : dicts) out.emplace(user, vectorize(dict, spec));
  return out;
}

FeatureStore::FeatureStore(FeatureSpec spec,
                           std::shared_ptr<const LstmWeights> weights,
                           size_t partitions)
    : spec_(std::move(spec)), weights_(std::move(weights)) {
  if (partitions == 0)
    throw ConfigError("feature store: partition count must be positive");
  if (!weights_) throw ConfigError("feature store: missing LSTM weights");
  parts_.reserve(partitions);
  for (size_t i = 0; i < partitions; ++i)
    parts_.push_back(std::make_unique<Partition>());
}

size_t FeatureStore::partition_of(std::string_view user_id) const {
  return fnv1a64(user_id) % parts_.size();
}

std::shared_ptr<const UserRecord> FeatureStore::find(
    std::string_view user_id) const {
  const Partition& p = *parts_[partition_of(user_id)];
  std::shared_lock lock(p.mu);
  auto it = p.users.find(std::string(user_id));
  return it == p.users.end() ? nullptr : it->second;
}

UserRecord FeatureStore::get_or_cold(std::string_view user_id) const {
  if (auto rec = find(user_id)) return *rec;
  return cold_record(std::string(user_id), spec_, *weights_);
}

void FeatureStore::put(UserRecord record) {
  Partition& p = *parts_[partition_of(record.user_id)];
  auto key = record.user_id;
  auto value = std::make_shared<const UserRecord>(std::move(record));
  std::unique_lock lock(p.mu);
  p.users[std::move(key)] = std::move(value);
}

std::shared_ptr<const UserRecord> FeatureStore::apply_event(
    const std::string& user_id, const Event& e) {
  Partition& p = *parts_[partition_of(user_id)];
  std::shared_ptr<const UserRecord> current;
  {
    std::shared_lock lock(p.mu);
    auto it = p.users.find(user_id);
    if (it != p.users.end()) current = it->second;
  }
  UserRecord base = current ? *current : cold_record(user_id, spec_, *weights_);
  auto next = std::make_shared<const UserRecord>(
      update_features(base, e, spec_, *weights_));
  {
    std::unique_lock lock(p.mu);
    p.users[user_id] = next;
  }
  return next;
}

void FeatureStore::settle_all(int64_t as_of) {
  for (auto& part : parts_) {
    std::unique_lock lock(part->mu);
    for (auto& [user, rec] : part->users) {
      UserRecord updated = *rec;
      evict_windows(updated.dict, spec_, as_of);
      updated.onehot = vectorize(updated.dict, spec_);
      rec = std::make_shared<const UserRecord>(std::move(updated));
    }
  }
}

size_t FeatureStore::size() const {
  size_t total = 0;
  for (const auto& part : parts_) {
    std::shared_lock lock(part->mu);
    total += part->users.size();
  }
  return total;
}

std::vector<std::string> FeatureStore::user_ids_sorted() const {
  std::vector<std::string> ids;
  ids.reserve(size());
  for (const auto& part : parts_) {
    std::shared_lock lock(part->mu);
    for (const auto& [user, rec] : part->users) ids.push_back(user);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void FeatureStore::for_each_sorted(
    const std::function<void(const UserRecord&)>& fn) const {
  for (const auto& id : user_ids_sorted()) {
    if (auto rec = find(id)) fn(*rec);
  }
}

void write_user_record(ByteWriter& w, const UserRecord& r) {
  w.str(r.user_id);
  w.i64(r.last_update);
  w.u64(r.lstm.steps_seen);
  w.u32(static_cast<uint32_t>(r.lstm.h.size()));
  for (double x : r.lstm.h) w.f64(x);
  for (double x : r.lstm.c) w.f64(x);
  w.u32(r.onehot.length);
  w.u32(static_cast<uint32_t>(r.onehot.indices.size()));
  for (uint32_t i : r.onehot.indices) w.u32(i);
  w.u32(static_cast<uint32_t>(r.dict.blocks.size()));
  for (const BlockState& b : r.dict.blocks) {
    if (const auto* t = std::get_if<TemporalState>(&b)) {
      w.u8(0);
      w.u64(t->count);
      w.u64(t->stamps.size());
      for (int64_t ts : t->stamps) w.i64(ts);
    } else if (const auto* f = std::get_if<FavoriteState>(&b)) {
      w.u8(1);
      w.u32(static_cast<uint32_t>(f->counts.size()));
      for (const auto& [bucket, count] : f->counts) {
        w.u32(bucket);
        w.u64(count);
      }
    } else {
      const auto& id = std::get<IdentityState>(b);
      w.u8(2);
      w.u8(id.seen ? 1 : 0);
      w.u32(id.bucket);
    }
  }
}

UserRecord read_user_record(ByteReader& r, const FeatureSpec& spec) {
  UserRecord rec;
  rec.user_id = r.str();
  rec.last_update = r.i64();
  rec.lstm.steps_seen = r.u64();
  const uint32_t n = r.u32();
  rec.lstm.h.resize(n);
  for (auto& x : rec.lstm.h) x = r.f64();
  rec.lstm.c.resize(n);
  for (auto& x : rec.lstm.c) x = r.f64();
  rec.onehot.length = r.u32();
  rec.onehot.indices.resize(r.u32());
  for (auto& i : rec.onehot.indices) i = r.u32();
  const uint32_t n_blocks = r.u32();
  if (n_blocks != spec.blocks.size())
    throw IoError("snapshot record for '" + rec.user_id + "' has " +
                  std::to_string(n_blocks) + " blocks, spec declares " +
                  std::to_string(spec.blocks.size()));
  rec.dict.blocks.reserve(n_blocks);
  for (uint32_t i = 0; i < n_blocks; ++i) {
    switch (r.u8()) {
      case 0: {
        TemporalState t;
        t.count = r.u64();
        const uint64_t len = r.u64();
        for (uint64_t k = 0; k < len; ++k) t.stamps.push_back(r.i64());
        rec.dict.blocks.emplace_back(std::move(t));
        break;
      }
      case 1: {
        FavoriteState f;
        const uint32_t entries = r.u32();
        for (uint32_t k = 0; k < entries; ++k) {
          const uint32_t bucket = r.u32();
          f.counts[bucket] = r.u64();
        }
        rec.dict.blocks.emplace_back(std::move(f));
        break;
      }
      case 2: {
        IdentityState id;
        id.seen = r.u8() != 0;
        id.bucket = r.u32();
        rec.dict.blocks.emplace_back(id);
        break;
      }
      default:
        throw IoError("snapshot record for '" + rec.user_id +
                      "' has an unknown block tag");
    }
  }
  return rec;
}

uint64_t FeatureStore::fingerprint() const {
  ByteWriter w;
  w.u64(size());
  for_each_sorted([&](const UserRecord& r) { write_user_record(w, r); });
  return fnv1a64(w.data());
}

FeatureStore build_store(const std::vector<Transaction>& transactions,
                         FeatureSpec spec,
                         std::shared_ptr<const LstmWeights> weights,
                         int64_t as_of, size_t partitions) {
  FeatureStore store(spec, weights, partitions);
  auto dicts = build_pass1(transactions, store.spec(), as_of);
  auto onehots = build_pass2(dicts, store.spec());

  // Per-user event sequences for the LSTM warm-up replay and last_update.
  std::map<std::string, std::vector<std::vector<double>>> sequences;
  std::map<std::string, int64_t> last_ts;
  for (const Transaction& tx : transactions) {
    sequences[tx.user_id].push_back(encode_event(tx.event, store.spec()));
    last_ts[tx.user_id] = tx.event.ts_ms;
  }

  for (auto& [user, dict] : dicts) {
    UserRecord r;
    r.user_id = user;
    r.dict = std::move(dict);
    r.onehot = std::move(onehots.at(user));
    r.lstm = lstm_replay(store.weights(), sequences.at(user));
    r.last_update = last_ts.at(user);
    store.put(std::move(r));
  }
  return store;
}

}  // namespace nbo
