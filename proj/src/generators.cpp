// SPDX-License-Identifier: Apache-2.0
#include "nbo/generators.hpp"

#include <algorithm>
#include <cmath>

#include "nbo/errors.hpp"
#include "nbo/rng.hpp"

namespace nbo {

namespace {

/// Zipf(s=1) sampler via the precomputed harmonic CDF.
class ZipfSampler {
public:
  explicit ZipfSampler(size_t n) : cdf_(n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
      acc += 1.0 / static_cast<double>(i + 1);
      cdf_[i] = acc;
    }
    for (double& x : cdf_) x /= acc;
  }

  size_t draw(Rng& rng) const {
    const double u = rng.uniform();
    return static_cast<size_t>(
        std::lower_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }

private:
  std::vector<double> cdf_;
};

}  // namespace

std::vector<Transaction> generate_transactions(const DataGenConfig& cfg) {
  if (cfg.n_users == 0 || cfg.n_products == 0)
    throw DomainError("gen-data: users and products must be positive");
  Rng rng(cfg.seed);
  const ZipfSampler user_zipf(cfg.n_users);
  const ZipfSampler product_zipf(cfg.n_products);
  const size_t n_categories = std::max<size_t>(4, cfg.n_products / 20);

  std::vector<Transaction> txs;
  txs.reserve(cfg.n_events);
  int64_t ts = cfg.start_ts_ms;
  for (size_t i = 0; i < cfg.n_events; ++i) {
    ts += static_cast<int64_t>(rng.index(
        static_cast<uint64_t>(std::max<int64_t>(1, cfg.max_gap_ms))));
    Transaction tx;
    tx.user_id = "u" + std::to_string(user_zipf.draw(rng));
    const size_t product = product_zipf.draw(rng);
    tx.event.ts_ms = ts;
    tx.event.item = "p" + std::to_string(product);
    tx.event.category = "c" + std::to_string(product % n_categories);
    const double roll = rng.uniform();
    if (roll < 0.45) {
      tx.event.type = "view";
    } else if (roll < 0.80) {
      tx.event.type = "impression";
    } else {
      tx.event.type = "order";
      tx.event.price = (1.0 + rng.index(9999)) / 100.0;  // 0.01 .. 99.99
    }
    txs.push_back(std::move(tx));
  }
  return txs;
}

LstmWeights generate_lstm_weights(uint64_t seed, size_t hidden_dim,
                                  size_t input_dim) {
  if (hidden_dim == 0 || input_dim == 0)
    throw DomainError("gen-model: dimensions must be positive");
  Rng rng(seed);
  const double scale = 0.5 / std::sqrt(static_cast<double>(hidden_dim));
  auto fill = [&](std::vector<double>& v, size_t n) {
    v.resize(n);
    for (double& x : v) x = rng.uniform(-scale, scale);
  };
  LstmWeights w;
  w.input_dim = input_dim;
  w.hidden_dim = hidden_dim;
  fill(w.w_in, 4 * hidden_dim * input_dim);
  fill(w.w_rec, 4 * hidden_dim * hidden_dim);
  fill(w.bias, 4 * hidden_dim);
  fill(w.dense_w, 2 * hidden_dim);
  fill(w.dense_b, 2);
  validate(w);
  return w;
}

namespace {

TreeNode leaf_node(double value) {
  TreeNode n;
  n.feature = TreeNode::kLeaf;
  n.value = value;
  return n;
}

uint32_t grow_tree(Tree& tree, Rng& rng, size_t depth, size_t n_features) {
  const uint32_t idx = static_cast<uint32_t>(tree.nodes.size());
  if (depth == 0 || rng.chance(0.2)) {
    tree.nodes.push_back(leaf_node(rng.uniform(-0.6, 0.6)));
    return idx;
  }
  tree.nodes.emplace_back();
  const auto feature = static_cast<int32_t>(rng.index(n_features));
  const uint32_t left = grow_tree(tree, rng, depth - 1, n_features);
  const uint32_t right = grow_tree(tree, rng, depth - 1, n_features);
  tree.nodes[idx].feature = feature;
  tree.nodes[idx].value = 0.5;  // one-hot inputs split cleanly at 0.5
  tree.nodes[idx].left = left;
  tree.nodes[idx].right = right;
  return idx;
}

}  // namespace

TreeEnsemble generate_gbdt(uint64_t seed, size_t n_trees, size_t depth,
                           size_t n_features) {
  if (n_features == 0)
    throw DomainError("gen-model: n_features must be positive");
  Rng rng(seed);
  TreeEnsemble e;
  e.n_features = static_cast<uint32_t>(n_features);
  e.base_score = 0.0;
  e.trees.reserve(n_trees);
  for (size_t t = 0; t < n_trees; ++t) {
    Tree tree;
    grow_tree(tree, rng, depth, n_features);
    e.trees.push_back(std::move(tree));
  }
  return e;
}

}  // namespace nbo
