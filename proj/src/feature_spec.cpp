// SPDX-License-Identifier: Apache-2.0
#include "nbo/feature_spec.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nbo/errors.hpp"
#include "nbo/hashing.hpp"

namespace nbo {

std::string_view attr_name(EventAttr a) {
  switch (a) {
    case EventAttr::type: return "type";
    case EventAttr::item: return "item";
    case EventAttr::category: return "category";
  }
  return "?";
}

EventAttr attr_from_name(std::string_view s) {
  if (s == "type") return EventAttr::type;
  if (s == "item") return EventAttr::item;
  if (s == "category") return EventAttr::category;
  throw ConfigError("unknown event attribute: " + std::string(s));
}

std::string_view event_attr_value(const Event& e, EventAttr a) {
  switch (a) {
    case EventAttr::type: return e.type;
    case EventAttr::item: return e.item;
    case EventAttr::category: return e.category;
  }
  return {};
}

size_t block_width(const FeatureBlock& b) {
  return std::visit(
      [](const auto& blk) -> size_t {
        using T = std::decay_t<decltype(blk)>;
        if constexpr (std::is_same_v<T, TemporalCountBlock>)
          return blk.boundaries.size() + 1;
        else
          return blk.buckets;
      },
      b);
}

const std::string& block_name(const FeatureBlock& b) {
  return std::visit([](const auto& blk) -> const std::string& { return blk.name; },
                    b);
}

size_t FeatureSpec::n_features() const {
  size_t total = 0;
  for (const auto& b : blocks) total += block_width(b);
  return total;
}

size_t FeatureSpec::lstm_input_dim() const {
  size_t total = 0;
  for (const auto& p : lstm_input)
    total += p.kind == LstmInputPart::Kind::hashed_onehot ? p.buckets : 1;
  return total;
}

size_t FeatureSpec::block_offset(size_t block_index) const {
  size_t off = 0;
  for (size_t i = 0; i < block_index; ++i) off += block_width(blocks[i]);
  return off;
}

void FeatureSpec::validate() const {
  for (const auto& b : blocks) {
    if (block_name(b).empty())
      throw ConfigError("feature spec: every block needs a name");
    if (const auto* t = std::get_if<TemporalCountBlock>(&b)) {
      if (t->window_ms <= 0)
        throw ConfigError("feature spec: block '" + t->name +
                          "': window must be positive");
      if (t->boundaries.empty())
        throw ConfigError("feature spec: block '" + t->name +
                          "': needs at least one bucket boundary");
      for (size_t i = 1; i < t->boundaries.size(); ++i)
        if (t->boundaries[i] <= t->boundaries[i - 1])
          throw ConfigError("feature spec: block '" + t->name +
                            "': boundaries must be strictly increasing");
    } else {
      const uint32_t buckets = std::holds_alternative<FavoriteBlock>(b)
                                   ? std::get<FavoriteBlock>(b).buckets
                                   : std::get<IdentityBlock>(b).buckets;
      if (buckets < 2)
        throw ConfigError("feature spec: block '" + block_name(b) +
                          "': bucket count must be >= 2");
    }
  }
  for (const auto& p : lstm_input) {
    if (p.kind == LstmInputPart::Kind::hashed_onehot && p.buckets < 2)
      throw ConfigError("feature spec: lstm_input one-hot bucket count must be >= 2");
    if (p.kind == LstmInputPart::Kind::numeric_price && !std::isfinite(p.scale))
      throw ConfigError("feature spec: lstm_input numeric scale must be finite");
  }
  if (lstm_input.empty())
    throw ConfigError("feature spec: lstm_input must not be empty");
}

std::vector<double> encode_event(const Event& e, const FeatureSpec& spec) {
  std::vector<double> x(spec.lstm_input_dim(), 0.0);
  size_t off = 0;
  for (const auto& p : spec.lstm_input) {
    if (p.kind == LstmInputPart::Kind::hashed_onehot) {
      x[off + encode_categorical(event_attr_value(e, p.attribute), p.buckets)] =
          1.0;
      off += p.buckets;
    } else {
      x[off] = e.price * p.scale;
      off += 1;
    }
  }
  return x;
}

FeatureSpec feature_spec_from_json(const nlohmann::json& j) {
  FeatureSpec spec;
  try {
    for (const auto& b : j.at("blocks")) {
      const std::string kind = b.at("kind").get<std::string>();
      if (kind == "temporal_count") {
        TemporalCountBlock t;
        t.name = b.at("name").get<std::string>();
        t.event_type = b.at("event_type").get<std::string>();
        t.window_ms = b.at("window_s").get<int64_t>() * 1000;
        t.boundaries = b.at("boundaries").get<std::vector<uint64_t>>();
        spec.blocks.emplace_back(std::move(t));
      } else if (kind == "favorite" || kind == "identity") {
        const auto name = b.at("name").get<std::string>();
        const auto attribute = attr_from_name(b.at("attribute").get<std::string>());
        const auto buckets = b.at("buckets").get<uint32_t>();
        if (kind == "favorite")
          spec.blocks.emplace_back(FavoriteBlock{name, attribute, buckets});
        else
          spec.blocks.emplace_back(IdentityBlock{name, attribute, buckets});
      } else {
        throw ConfigError("feature spec: unknown block kind '" + kind + "'");
      }
    }
    for (const auto& p : j.at("lstm_input")) {
      const std::string kind = p.at("kind").get<std::string>();
      LstmInputPart part;
      if (kind == "hashed_onehot") {
        part.kind = LstmInputPart::Kind::hashed_onehot;
        part.attribute = attr_from_name(p.at("attribute").get<std::string>());
        part.buckets = p.at("buckets").get<uint32_t>();
      } else if (kind == "numeric") {
        part.kind = LstmInputPart::Kind::numeric_price;
        part.scale = p.value("scale", 1.0);
      } else {
        throw ConfigError("feature spec: unknown lstm_input kind '" + kind +
                          "'");
      }
      spec.lstm_input.push_back(part);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("feature spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::json feature_spec_to_json(const FeatureSpec& spec) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : spec.blocks) {
    nlohmann::json jb;
    if (const auto* t = std::get_if<TemporalCountBlock>(&b)) {
      jb["kind"] = "temporal_count";
      jb["name"] = t->name;
      jb["event_type"] = t->event_type;
      jb["window_s"] = t->window_ms / 1000;
      jb["boundaries"] = t->boundaries;
    } else if (const auto* f = std::get_if<FavoriteBlock>(&b)) {
      jb["kind"] = "favorite";
      jb["name"] = f->name;
      jb["attribute"] = std::string(attr_name(f->attribute));
      jb["buckets"] = f->buckets;
    } else {
      const auto& id = std::get<IdentityBlock>(b);
      jb["kind"] = "identity";
      jb["name"] = id.name;
      jb["attribute"] = std::string(attr_name(id.attribute));
      jb["buckets"] = id.buckets;
    }
    blocks.push_back(std::move(jb));
  }
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : spec.lstm_input) {
    nlohmann::json jp;
    if (p.kind == LstmInputPart::Kind::hashed_onehot) {
      jp["kind"] = "hashed_onehot";
      jp["attribute"] = std::string(attr_name(p.attribute));
      jp["buckets"] = p.buckets;
    } else {
      jp["kind"] = "numeric";
      jp["scale"] = p.scale;
    }
    parts.push_back(std::move(jp));
  }
  return nlohmann::json{{"blocks", std::move(blocks)},
                        {"lstm_input", std::move(parts)}};
}

FeatureSpec load_feature_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("feature spec: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("feature spec: " + path.string() + ": " + e.what());
  }
  return feature_spec_from_json(j);
}

void save_feature_spec(const FeatureSpec& spec,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("feature spec: cannot write " + path.string());
  out << feature_spec_to_json(spec).dump(1) << '\n';
}

FeatureSpec default_feature_spec() {
  FeatureSpec spec;
  spec.blocks = {
      TemporalCountBlock{"views_2h", "view", 2 * 3600 * 1000, {1, 3, 10}},
      TemporalCountBlock{"orders_24h", "order", 24 * 3600 * 1000, {1, 2, 5}},
      TemporalCountBlock{"impressions_1h", "impression", 3600 * 1000, {1, 5}},
      FavoriteBlock{"fav_category", EventAttr::category, 16},
      FavoriteBlock{"fav_item", EventAttr::item, 32},
      IdentityBlock{"last_category", EventAttr::category, 16},
  };
  spec.lstm_input = {
      LstmInputPart{LstmInputPart::Kind::hashed_onehot, EventAttr::type, 4, 1.0},
      LstmInputPart{LstmInputPart::Kind::hashed_onehot, EventAttr::category, 12,
                    1.0},
      LstmInputPart{LstmInputPart::Kind::hashed_onehot, EventAttr::item, 16,
                    1.0},
      LstmInputPart{LstmInputPart::Kind::numeric_price, EventAttr::type, 0,
                    0.01},
  };
  spec.validate();
  return spec;
}

}  // namespace nbo
