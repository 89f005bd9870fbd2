// SPDX-License-Identifier: Apache-2.0
#include "nbo/lstm.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nbo/errors.hpp"

namespace nbo {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// y += M * x for a row-major (rows x cols) matrix. Plain loops on purpose:
// inference must stay single-threaded per call.
void add_matvec(std::span<const double> m, size_t rows, size_t cols,
                std::span<const double> x, std::span<double> y) {
  for (size_t r = 0; r < rows; ++r) {
    const double* row = m.data() + r * cols;
    double acc = 0.0;
    for (size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

}  // namespace

void validate(const LstmWeights& w) {
  const size_t d = w.input_dim, n = w.hidden_dim;
  if (d == 0 || n == 0)
    throw DimensionError("lstm: input_dim and hidden_dim must be positive");
  auto expect = [](size_t got, size_t want, const char* field) {
    if (got != want)
      throw DimensionError(std::string("lstm: field ") + field + " has " +
                           std::to_string(got) + " entries, expected " +
                           std::to_string(want));
  };
  expect(w.w_in.size(), 4 * n * d, "W");
  expect(w.w_rec.size(), 4 * n * n, "U");
  expect(w.bias.size(), 4 * n, "b");
  expect(w.dense_w.size(), 2 * n, "dense_W");
  expect(w.dense_b.size(), 2, "dense_b");
  for (const auto* v : {&w.w_in, &w.w_rec, &w.bias, &w.dense_w, &w.dense_b}) {
    if (!all_finite(*v))
      throw NonFiniteError("lstm: weights contain a non-finite value");
  }
}

LstmState lstm_zero_state(const LstmWeights& w) {
  LstmState s;
  s.h.assign(w.hidden_dim, 0.0);
  s.c.assign(w.hidden_dim, 0.0);
  return s;
}

LstmState lstm_step(const LstmWeights& w, const LstmState& state,
                    std::span<const double> x) {
  const size_t d = w.input_dim, n = w.hidden_dim;
  if (x.size() != d)
    throw DimensionError("lstm_step: input has " + std::to_string(x.size()) +
                         " entries, expected " + std::to_string(d));
  if (state.h.size() != n || state.c.size() != n)
    throw DimensionError("lstm_step: state size does not match hidden_dim");
  if (!all_finite(x))
    throw NonFiniteError("lstm_step: input contains a non-finite value");
  if (!all_finite(state.h) || !all_finite(state.c))
    throw NonFiniteError("lstm_step: state contains a non-finite value");

  // gates = b + W x + U h, laid out as the four [i, f, g, o] blocks.
  std::vector<double> gates(w.bias.begin(), w.bias.end());
  add_matvec(w.w_in, 4 * n, d, x, gates);
  add_matvec(w.w_rec, 4 * n, n, state.h, gates);

  LstmState out;
  out.h.resize(n);
  out.c.resize(n);
  out.steps_seen = state.steps_seen + 1;
  for (size_t j = 0; j < n; ++j) {
    const double gi = sigmoid(gates[j]);
    const double gf = sigmoid(gates[n + j]);
    const double gg = std::tanh(gates[2 * n + j]);
    const double go = sigmoid(gates[3 * n + j]);
    const double c = gf * state.c[j] + gi * gg;
    out.c[j] = c;
    out.h[j] = go * std::tanh(c);
  }
  return out;
}

std::pair<double, double> lstm_predict(const LstmWeights& w,
                                       const LstmState& state) {
  const size_t n = w.hidden_dim;
  if (state.h.size() != n)
    throw DimensionError("lstm_predict: state size does not match hidden_dim");

  double logits[2] = {w.dense_b[0], w.dense_b[1]};
  for (size_t j = 0; j < n; ++j) {
    logits[0] += w.dense_w[j] * state.h[j];
    logits[1] += w.dense_w[n + j] * state.h[j];
  }
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

LstmState lstm_replay(const LstmWeights& w,
                      const std::vector<std::vector<double>>& sequence) {
  LstmState s = lstm_zero_state(w);
  for (size_t i = 0; i < sequence.size(); ++i) {
    if (sequence[i].size() != w.input_dim)
      throw DimensionError("lstm_replay: element " + std::to_string(i) +
                           " has " + std::to_string(sequence[i].size()) +
                           " entries, expected " +
                           std::to_string(w.input_dim));
    s = lstm_step(w, s, sequence[i]);
  }
  return s;
}

namespace {

std::vector<double> read_matrix(const nlohmann::json& j, const char* field,
                                size_t rows, size_t cols) {
  const auto& m = j.at(field);
  if (!m.is_array() || m.size() != rows)
    throw DimensionError(std::string("lstm: field ") + field + " has " +
                         std::to_string(m.is_array() ? m.size() : 0) +
                         " rows, expected " + std::to_string(rows));
  std::vector<double> out;
  out.reserve(rows * cols);
  for (size_t r = 0; r < rows; ++r) {
    const auto& row = m[r];
    if (!row.is_array() || row.size() != cols)
      throw DimensionError(std::string("lstm: field ") + field + " row " +
                           std::to_string(r) + " has " +
                           std::to_string(row.is_array() ? row.size() : 0) +
                           " entries, expected " + std::to_string(cols));
    for (size_t c = 0; c < cols; ++c) out.push_back(row[c].get<double>());
  }
  return out;
}

std::vector<double> read_vector(const nlohmann::json& j, const char* field,
                                size_t len) {
  const auto& v = j.at(field);
  if (!v.is_array() || v.size() != len)
    throw DimensionError(std::string("lstm: field ") + field + " has " +
                         std::to_string(v.is_array() ? v.size() : 0) +
                         " entries, expected " + std::to_string(len));
  std::vector<double> out;
  out.reserve(len);
  for (const auto& x : v) out.push_back(x.get<double>());
  return out;
}

nlohmann::json matrix_json(std::span<const double> m, size_t rows,
                           size_t cols) {
  nlohmann::json out = nlohmann::json::array();
  for (size_t r = 0; r < rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (size_t c = 0; c < cols; ++c) row.push_back(m[r * cols + c]);
    out.push_back(std::move(row));
  }
  return out;
}

constexpr const char* kGateNamesW[4] = {"W_i", "W_f", "W_g", "W_o"};
constexpr const char* kGateNamesU[4] = {"U_i", "U_f", "U_g", "U_o"};
constexpr const char* kGateNamesB[4] = {"b_i", "b_f", "b_g", "b_o"};

}  // namespace

LstmWeights lstm_weights_from_json(const nlohmann::json& j) {
  LstmWeights w;
  try {
    w.input_dim = j.at("input_dim").get<size_t>();
    w.hidden_dim = j.at("hidden_dim").get<size_t>();
    if (w.input_dim == 0 || w.hidden_dim == 0)
      throw DimensionError("lstm: input_dim and hidden_dim must be positive");
    const size_t d = w.input_dim, n = w.hidden_dim;
    w.w_in.reserve(4 * n * d);
    w.w_rec.reserve(4 * n * n);
    w.bias.reserve(4 * n);
    for (int g = 0; g < 4; ++g) {
      auto block = read_matrix(j, kGateNamesW[g], n, d);
      w.w_in.insert(w.w_in.end(), block.begin(), block.end());
    }
    for (int g = 0; g < 4; ++g) {
      auto block = read_matrix(j, kGateNamesU[g], n, n);
      w.w_rec.insert(w.w_rec.end(), block.begin(), block.end());
    }
    for (int g = 0; g < 4; ++g) {
      auto block = read_vector(j, kGateNamesB[g], n);
      w.bias.insert(w.bias.end(), block.begin(), block.end());
    }
    w.dense_w = read_matrix(j, "dense_W", 2, n);
    w.dense_b = read_vector(j, "dense_b", 2);
  } catch (const nlohmann::json::out_of_range& e) {
    // id 403: missing key; id 406: number overflow (1e999 and friends).
    if (e.id == 406)
      throw NonFiniteError(std::string("lstm: non-finite value: ") + e.what());
    throw ParseError(std::string("lstm: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("lstm: ") + e.what());
  }
  validate(w);
  return w;
}

nlohmann::json lstm_weights_to_json(const LstmWeights& w) {
  const size_t d = w.input_dim, n = w.hidden_dim;
  nlohmann::json j;
  j["input_dim"] = d;
  j["hidden_dim"] = n;
  for (int g = 0; g < 4; ++g) {
    j[kGateNamesW[g]] =
        matrix_json({w.w_in.data() + g * n * d, n * d}, n, d);
    j[kGateNamesU[g]] =
        matrix_json({w.w_rec.data() + g * n * n, n * n}, n, n);
    j[kGateNamesB[g]] = std::vector<double>(w.bias.begin() + g * n,
                                            w.bias.begin() + (g + 1) * n);
  }
  j["dense_W"] = matrix_json(w.dense_w, 2, n);
  j["dense_b"] = w.dense_b;
  return j;
}

LstmWeights load_lstm_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("lstm: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::out_of_range& e) {
    if (e.id == 406)
      throw NonFiniteError(std::string("lstm: non-finite value in ") +
                           path.string() + ": " + e.what());
    throw ParseError(std::string("lstm: ") + path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("lstm: ") + path.string() + ": " + e.what());
  }
  return lstm_weights_from_json(j);
}

void save_lstm_weights(const LstmWeights& w,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("lstm: cannot write " + path.string());
  out << lstm_weights_to_json(w).dump(1) << '\n';
}

}  // namespace nbo
