// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace nbo {

/// Parameters of a single-layer LSTM followed by a 2-node softmax head.
///
/// Gate blocks are stored in the fixed order [i, f, g, o] (input gate,
/// forget gate, candidate, output gate) as consecutive hidden_dim-row
/// blocks of the 4n x d input kernel and 4n x n recurrent kernel. The
/// order is part of the model file contract.
struct LstmWeights {
  size_t input_dim = 0;   // d
  size_t hidden_dim = 0;  // n
  std::vector<double> w_in;     // 4n x d, row-major
  std::vector<double> w_rec;    // 4n x n, row-major
  std::vector<double> bias;     // 4n
  std::vector<double> dense_w;  // 2 x n, row-major
  std::vector<double> dense_b;  // 2
};

/// The per-user recurrent state. Holding (h, c) is what makes inference for
/// the next event constant-time instead of a replay over the full history.
struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
  uint64_t steps_seen = 0;

  bool operator==(const LstmState&) const = default;
};

/// Throws DimensionError / NonFiniteError if the weights are inconsistent.
void validate(const LstmWeights& w);

LstmState lstm_zero_state(const LstmWeights& w);

/// Advance the state by one input vector. Pure function: the input state is
/// not mutated. Throws DimensionError on shape mismatch and NonFiniteError
/// if x or the state contain non-finite values.
LstmState lstm_step(const LstmWeights& w, const LstmState& state,
                    std::span<const double> x);

/// Softmax over the dense head: returns (p_neg, p_pos). p_pos is the repeat
/// probability consumed downstream. Entries sum to 1 within 1e-12.
std::pair<double, double> lstm_predict(const LstmWeights& w,
                                       const LstmState& state);

/// Fold a whole input sequence from the zero state. This is the naive
/// full-history path kept as the correctness oracle for incremental
/// stepping and as the batch state builder.
LstmState lstm_replay(const LstmWeights& w,
                      const std::vector<std::vector<double>>& sequence);

LstmWeights lstm_weights_from_json(const nlohmann::json& j);
nlohmann::json lstm_weights_to_json(const LstmWeights& w);

LstmWeights load_lstm_weights(const std::filesystem::path& path);
void save_lstm_weights(const LstmWeights& w, const std::filesystem::path& path);

}  // namespace nbo
