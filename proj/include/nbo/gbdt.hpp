// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace nbo {

/// One node of a binary decision tree in the flattened array layout used for
/// inference. Internal nodes split on features[feature] < value (go left) /
/// otherwise right; leaves have feature == kLeaf and value = contribution
/// to the raw score.
struct TreeNode {
  static constexpr int32_t kLeaf = -1;
  int32_t feature = kLeaf;
  double value = 0.0;  // threshold for internal nodes, leaf value for leaves
  uint32_t left = 0;
  uint32_t right = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at index 0; empty tree contributes 0
};

/// Additive ensemble of binary trees. Raw score = base_score + sum of
/// reached leaves; probability = sigmoid(raw).
struct TreeEnsemble {
  uint32_t n_features = 0;
  double base_score = 0.0;
  std::vector<Tree> trees;
};

inline constexpr size_t kDefaultMaxTreeDepth = 64;

double sigmoid(double x);

double gbdt_raw(const TreeEnsemble& e, std::span<const double> features);

/// Probability in (0, 1). Traversal rule: features[f] < threshold goes left,
/// equality goes right. Throws DimensionError on a length mismatch.
double gbdt_score(const TreeEnsemble& e, std::span<const double> features);

TreeEnsemble gbdt_from_json(const nlohmann::json& j,
                            size_t max_depth = kDefaultMaxTreeDepth);
nlohmann::json gbdt_to_json(const TreeEnsemble& e);

TreeEnsemble load_gbdt(const std::filesystem::path& path,
                       size_t max_depth = kDefaultMaxTreeDepth);
void save_gbdt(const TreeEnsemble& e, const std::filesystem::path& path);

}  // namespace nbo
