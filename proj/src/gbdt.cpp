// SPDX-License-Identifier: Apache-2.0
#include "nbo/gbdt.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nbo/errors.hpp"

namespace nbo {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double gbdt_raw(const TreeEnsemble& e, std::span<const double> features) {
  if (features.size() != e.n_features)
    throw DimensionError("gbdt: feature vector has " +
                         std::to_string(features.size()) +
                         " entries, expected " + std::to_string(e.n_features));
  double raw = e.base_score;
  for (const Tree& t : e.trees) {
    if (t.nodes.empty()) continue;
    uint32_t idx = 0;
    while (t.nodes[idx].feature != TreeNode::kLeaf) {
      const TreeNode& n = t.nodes[idx];
      idx = features[static_cast<size_t>(n.feature)] < n.value ? n.left
                                                               : n.right;
    }
    raw += t.nodes[idx].value;
  }
  return raw;
}

double gbdt_score(const TreeEnsemble& e, std::span<const double> features) {
  return sigmoid(gbdt_raw(e, features));
}

namespace {

// Flattens the recursive node objects, validating as it goes. Depth is
// bounded so that a hostile or corrupt file cannot blow the stack.
uint32_t flatten_node(const nlohmann::json& j, Tree& tree, uint32_t n_features,
                      size_t depth, size_t max_depth, size_t tree_index) {
  if (depth > max_depth)
    throw ParseError("gbdt: tree " + std::to_string(tree_index) +
                     " exceeds max depth " + std::to_string(max_depth));
  if (!j.is_object())
    throw ParseError("gbdt: tree " + std::to_string(tree_index) +
                     " contains a non-object node");
  const uint32_t idx = static_cast<uint32_t>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("leaf")) {
    const double v = j.at("leaf").get<double>();
    if (!std::isfinite(v))
      throw NonFiniteError("gbdt: tree " + std::to_string(tree_index) +
                           " has a non-finite leaf value");
    tree.nodes[idx].feature = TreeNode::kLeaf;
    tree.nodes[idx].value = v;
    return idx;
  }
  const int64_t f = j.at("feature").get<int64_t>();
  if (f < 0 || f >= static_cast<int64_t>(n_features))
    throw ParseError("gbdt: tree " + std::to_string(tree_index) +
                     " splits on feature " + std::to_string(f) +
                     ", valid range is [0, " + std::to_string(n_features) +
                     ")");
  const double thr = j.at("threshold").get<double>();
  if (!std::isfinite(thr))
    throw NonFiniteError("gbdt: tree " + std::to_string(tree_index) +
                         " has a non-finite threshold");
  const uint32_t left = flatten_node(j.at("left"), tree, n_features, depth + 1,
                                     max_depth, tree_index);
  const uint32_t right = flatten_node(j.at("right"), tree, n_features,
                                      depth + 1, max_depth, tree_index);
  tree.nodes[idx].feature = static_cast<int32_t>(f);
  tree.nodes[idx].value = thr;
  tree.nodes[idx].left = left;
  tree.nodes[idx].right = right;
  return idx;
}

nlohmann::json node_json(const Tree& t, uint32_t idx) {
  const TreeNode& n = t.nodes[idx];
  nlohmann::json j;
  if (n.feature == TreeNode::kLeaf) {
    j["leaf"] = n.value;
  } else {
    j["feature"] = n.feature;
    j["threshold"] = n.value;
    j["left"] = node_json(t, n.left);
    j["right"] = node_json(t, n.right);
  }
  return j;
}

}  // namespace

TreeEnsemble gbdt_from_json(const nlohmann::json& j, size_t max_depth) {
  TreeEnsemble e;
  try {
    e.n_features = j.at("n_features").get<uint32_t>();
    if (e.n_features == 0)
      throw ParseError("gbdt: n_features must be positive");
    e.base_score = j.at("base_score").get<double>();
    if (!std::isfinite(e.base_score))
      throw NonFiniteError("gbdt: base_score is non-finite");
    const auto& trees = j.at("trees");
    if (!trees.is_array()) throw ParseError("gbdt: trees must be an array");
    e.trees.reserve(trees.size());
    for (size_t i = 0; i < trees.size(); ++i) {
      Tree t;
      flatten_node(trees[i], t, e.n_features, 0, max_depth, i);
      e.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::out_of_range& ex) {
    if (ex.id == 406)
      throw NonFiniteError(std::string("gbdt: non-finite value: ") +
                           ex.what());
    throw ParseError(std::string("gbdt: ") + ex.what());
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("gbdt: ") + ex.what());
  }
  return e;
}

nlohmann::json gbdt_to_json(const TreeEnsemble& e) {
  nlohmann::json j;
  j["n_features"] = e.n_features;
  j["base_score"] = e.base_score;
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : e.trees) {
    if (t.nodes.empty())
      trees.push_back(nlohmann::json{{"leaf", 0.0}});
    else
      trees.push_back(node_json(t, 0));
  }
  j["trees"] = std::move(trees);
  return j;
}

TreeEnsemble load_gbdt(const std::filesystem::path& path, size_t max_depth) {
  std::ifstream in(path);
  if (!in) throw IoError("gbdt: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::out_of_range& e) {
    if (e.id == 406)
      throw NonFiniteError(std::string("gbdt: non-finite value in ") +
                           path.string() + ": " + e.what());
    throw ParseError(std::string("gbdt: ") + path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("gbdt: ") + path.string() + ": " + e.what());
  }
  return gbdt_from_json(j, max_depth);
}

void save_gbdt(const TreeEnsemble& e, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("gbdt: cannot write " + path.string());
  out << gbdt_to_json(e).dump(1) << '\n';
}

}  // namespace nbo
