// SPDX-License-Identifier: Apache-2.0
#include "nbo/startup.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "nbo/csv.hpp"
#include "nbo/errors.hpp"

namespace nbo {

namespace {

int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

/// Calibrates (w, tau) on per-user model scores against a had-an-order
/// label. A stand-in at desk scale: real deployments calibrate on held-out
/// conversions.
void calibrate(Engine& engine,
               const std::map<std::string, int>& labels_by_user,
               StartupResult* result) {
  std::vector<double> p_gbdt, p_lstm;
  std::vector<int> labels;
  engine.store->for_each_sorted([&](const UserRecord& r) {
    p_gbdt.push_back(gbdt_score(*engine.gbdt, r.onehot.densify()));
    p_lstm.push_back(lstm_predict(*engine.lstm, r.lstm).second);
    auto it = labels_by_user.find(r.user_id);
    labels.push_back(it != labels_by_user.end() ? it->second : 0);
  });

  auto warn = [&](const std::string& msg) {
    if (result) result->warnings.push_back(msg);
  };
  if (labels.empty()) {
    warn("no users; calibration skipped, using defaults w=0.5 tau=0.5");
    return;
  }
  const bool has_pos = std::count(labels.begin(), labels.end(), 1) > 0;
  const bool has_neg = std::count(labels.begin(), labels.end(), 0) > 0;
  if (!has_pos || !has_neg) {
    warn("single-class labels; calibration skipped, using defaults w=0.5 tau=0.5");
    return;
  }

  EnsembleModel& m = engine.ensemble;
  const auto wcal = calibrate_weight(p_gbdt, p_lstm, labels, m.grid_step_w);
  m.w = wcal.w;
  m.auc = wcal.auc;
  std::vector<double> blended(labels.size());
  for (size_t i = 0; i < blended.size(); ++i)
    blended[i] = ensemble_score(p_gbdt[i], p_lstm[i], m.w);
  const auto tcal = calibrate_threshold(blended, labels, m.grid_step_tau);
  m.tau = tcal.tau;
  m.fscore = tcal.fscore;
  m.calibrated = true;
  if (result) result->calibrated = true;
}

}  // namespace

Engine build_engine(const std::vector<Transaction>& transactions,
                    FeatureSpec spec, LstmWeights lstm, TreeEnsemble gbdt,
                    size_t partitions, StartupResult* result) {
  spec.validate();
  validate(lstm);
  if (spec.n_features() != gbdt.n_features)
    throw ConfigError("spec declares " + std::to_string(spec.n_features()) +
                      " features but the tree model expects " +
                      std::to_string(gbdt.n_features));
  if (spec.lstm_input_dim() != lstm.input_dim)
    throw ConfigError("spec lstm_input is " +
                      std::to_string(spec.lstm_input_dim()) +
                      " wide but the LSTM expects input_dim " +
                      std::to_string(lstm.input_dim));

  Engine engine;
  engine.lstm = std::make_shared<const LstmWeights>(std::move(lstm));
  engine.gbdt = std::make_shared<const TreeEnsemble>(std::move(gbdt));

  const int64_t t_features = now_ms();
  const int64_t as_of =
      transactions.empty() ? 0 : transactions.back().event.ts_ms;
  auto dicts = build_pass1(transactions, spec, as_of);
  auto onehots = build_pass2(dicts, spec);
  const int64_t t_warmup = now_ms();

  engine.store = std::make_unique<FeatureStore>(std::move(spec), engine.lstm,
                                                partitions);
  // Replay each user's event sequence to warm the cached (h, c) state.
  std::map<std::string, std::vector<std::vector<double>>> sequences;
  std::map<std::string, int64_t> last_ts;
  std::map<std::string, uint64_t> order_counts;
  for (const Transaction& tx : transactions) {
    sequences[tx.user_id].push_back(encode_event(tx.event, engine.store->spec()));
    last_ts[tx.user_id] = tx.event.ts_ms;
    if (tx.event.type == "order") ++order_counts[tx.user_id];
  }

  // Calibration label: heavier-than-median repeat buyer. A median split
  // keeps both classes populated on skewed synthetic streams.
  std::map<std::string, int> labels;
  if (!sequences.empty()) {
    std::vector<uint64_t> counts;
    counts.reserve(sequences.size());
    for (const auto& [user, seq] : sequences) {
      auto it = order_counts.find(user);
      counts.push_back(it == order_counts.end() ? 0 : it->second);
    }
    std::nth_element(counts.begin(), counts.begin() + counts.size() / 2,
                     counts.end());
    const uint64_t median = counts[counts.size() / 2];
    for (const auto& [user, seq] : sequences) {
      auto it = order_counts.find(user);
      const uint64_t n = it == order_counts.end() ? 0 : it->second;
      labels[user] = n > median ? 1 : 0;
    }
  }
  for (auto& [user, dict] : dicts) {
    UserRecord r;
    r.user_id = user;
    r.dict = std::move(dict);
    r.onehot = std::move(onehots.at(user));
    r.lstm = lstm_replay(engine.store->weights(), sequences.at(user));
    r.last_update = last_ts.at(user);
    engine.store->put(std::move(r));
  }

  if (result) {
    result->users = engine.store->size();
    result->events = transactions.size();
  }
  if (transactions.empty()) {
    if (result)
      result->warnings.push_back(
          "empty transaction stream; snapshot will hold no users");
  }
  calibrate(engine, labels, result);
  const int64_t t_done = now_ms();
  if (result) {
    result->timing.feature_build_ms = t_warmup - t_features;
    result->timing.warmup_ms = t_done - t_warmup;
  }
  return engine;
}

StartupResult run_startup(const std::filesystem::path& transactions_path,
                          const std::filesystem::path& spec_path,
                          const std::filesystem::path& lstm_path,
                          const std::filesystem::path& gbdt_path,
                          const std::filesystem::path& snapshot_out,
                          size_t partitions) {
  StartupResult result;
  auto transactions = read_transactions(transactions_path);
  auto spec = load_feature_spec(spec_path);
  auto lstm = load_lstm_weights(lstm_path);
  auto gbdt = load_gbdt(gbdt_path);
  Engine engine = build_engine(transactions, std::move(spec), std::move(lstm),
                               std::move(gbdt), partitions, &result);
  save_snapshot(engine, snapshot_out);
  return result;
}

}  // namespace nbo
