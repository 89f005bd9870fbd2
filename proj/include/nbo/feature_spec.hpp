// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nbo/event.hpp"

namespace nbo {

/// Event attribute a categorical feature can hash.
enum class EventAttr { type, item, category };

std::string_view attr_name(EventAttr a);
EventAttr attr_from_name(std::string_view s);
std::string_view event_attr_value(const Event& e, EventAttr a);

/// Count of events of one type inside a sliding window, one-hot encoded by
/// value buckets: count < boundaries[0] -> bucket 0, count in
/// [boundaries[i], boundaries[i+1]) -> bucket i+1, count >= back() -> last.
/// Block width = boundaries.size() + 1.
struct TemporalCountBlock {
  std::string name;
  std::string event_type;
  int64_t window_ms = 0;
  std::vector<uint64_t> boundaries;  // strictly increasing
};

/// One-hot of the hash bucket seen most often for an attribute; ties go to
/// the lowest bucket index. Width = buckets.
struct FavoriteBlock {
  std::string name;
  EventAttr attribute = EventAttr::category;
  uint32_t buckets = 0;
};

/// One-hot of the hash bucket of the attribute's current (latest) value.
/// Width = buckets.
struct IdentityBlock {
  std::string name;
  EventAttr attribute = EventAttr::category;
  uint32_t buckets = 0;
};

using FeatureBlock =
    std::variant<TemporalCountBlock, FavoriteBlock, IdentityBlock>;

size_t block_width(const FeatureBlock& b);
const std::string& block_name(const FeatureBlock& b);

/// One slice of the per-event LSTM input vector: either a hashed one-hot of
/// an event attribute (width = buckets) or the scaled price (width 1).
struct LstmInputPart {
  enum class Kind { hashed_onehot, numeric_price };
  Kind kind = Kind::hashed_onehot;
  EventAttr attribute = EventAttr::type;  // hashed_onehot only
  uint32_t buckets = 0;                   // hashed_onehot only
  double scale = 1.0;                     // numeric_price only
};

/// Ordered layout of the concatenated one-hot vector (the tree-model input)
/// and of the per-event LSTM input vector.
struct FeatureSpec {
  std::vector<FeatureBlock> blocks;
  std::vector<LstmInputPart> lstm_input;

  size_t n_features() const;
  size_t lstm_input_dim() const;
  size_t block_offset(size_t block_index) const;

  /// Throws ConfigError on inconsistent definitions.
  void validate() const;
};

/// Encode one event into the LSTM input vector defined by the spec.
std::vector<double> encode_event(const Event& e, const FeatureSpec& spec);

FeatureSpec feature_spec_from_json(const nlohmann::json& j);
nlohmann::json feature_spec_to_json(const FeatureSpec& spec);
FeatureSpec load_feature_spec(const std::filesystem::path& path);
void save_feature_spec(const FeatureSpec& spec,
                       const std::filesystem::path& path);

/// The spec shipped with the CLI and used by tests: three window counters,
/// two favorites and one identity block (75 features), with a 33-wide LSTM
/// input (type/category/item one-hots plus scaled price).
FeatureSpec default_feature_spec();

}  // namespace nbo
