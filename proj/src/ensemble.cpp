// SPDX-License-Identifier: Apache-2.0
#include "nbo/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "nbo/errors.hpp"
#include "nbo/metrics.hpp"

namespace nbo {

namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0))
    throw DomainError(std::string(what) + " must be in [0, 1], got " +
                      std::to_string(p));
}

}  // namespace

double ensemble_score(double p_gbdt, double p_lstm, double w) {
  check_probability(p_gbdt, "p_gbdt");
  check_probability(p_lstm, "p_lstm");
  check_probability(w, "w");
  return std::clamp(w * p_gbdt + (1.0 - w) * p_lstm, 0.0, 1.0);
}

bool decide(double score, double tau) {
  check_probability(score, "score");
  check_probability(tau, "tau");
  return score >= tau;
}

std::vector<double> calibration_grid(double step) {
  if (!(step > 0.0 && step <= 1.0))
    throw DomainError("calibration grid step must be in (0, 1]");
  const size_t k_max = static_cast<size_t>(std::llround(1.0 / step));
  std::vector<double> grid;
  grid.reserve(k_max + 1);
  for (size_t k = 0; k < k_max; ++k)
    grid.push_back(static_cast<double>(k) * step);
  grid.push_back(1.0);
  return grid;
}

WeightCalibration calibrate_weight(std::span<const double> p_gbdt,
                                   std::span<const double> p_lstm,
                                   std::span<const int> labels,
                                   double grid_step) {
  if (p_gbdt.size() != p_lstm.size() || p_gbdt.size() != labels.size())
    throw DimensionError("calibrate_weight: input lengths differ");
  if (p_gbdt.empty()) throw DomainError("calibrate_weight: empty input");

  std::vector<double> blended(p_gbdt.size());
  WeightCalibration best{0.0, -1.0};
  for (double w : calibration_grid(grid_step)) {
    for (size_t i = 0; i < blended.size(); ++i)
      blended[i] = ensemble_score(p_gbdt[i], p_lstm[i], w);
    const double a = auc(blended, labels);  // throws on single-class labels
    if (a > best.auc) best = {w, a};        // strict: ties keep the smaller w
  }
  return best;
}

ThresholdCalibration calibrate_threshold(std::span<const double> scores,
                                         std::span<const int> labels,
                                         double grid_step) {
  if (scores.size() != labels.size())
    throw DimensionError("calibrate_threshold: input lengths differ");
  if (scores.empty()) throw DomainError("calibrate_threshold: empty input");

  std::vector<int> preds(scores.size());
  ThresholdCalibration best{0.0, -1.0};
  for (double tau : calibration_grid(grid_step)) {
    for (size_t i = 0; i < preds.size(); ++i)
      preds[i] = scores[i] >= tau ? 1 : 0;
    const double f = f_score(preds, labels).f1;
    if (f >= best.fscore) best = {tau, f};  // >=: ties take the larger tau
  }
  return best;
}

nlohmann::json ensemble_to_json(const EnsembleModel& m) {
  return nlohmann::json{{"w", m.w},
                        {"tau", m.tau},
                        {"grid_step_w", m.grid_step_w},
                        {"grid_step_tau", m.grid_step_tau},
                        {"auc", m.auc},
                        {"fscore", m.fscore},
                        {"calibrated", m.calibrated}};
}

EnsembleModel ensemble_from_json(const nlohmann::json& j) {
  EnsembleModel m;
  try {
    m.w = j.at("w").get<double>();
    m.tau = j.at("tau").get<double>();
    m.grid_step_w = j.at("grid_step_w").get<double>();
    m.grid_step_tau = j.at("grid_step_tau").get<double>();
    m.auc = j.at("auc").get<double>();
    m.fscore = j.at("fscore").get<double>();
    m.calibrated = j.value("calibrated", false);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ensemble: ") + e.what());
  }
  if (!(m.w >= 0.0 && m.w <= 1.0) || !(m.tau >= 0.0 && m.tau <= 1.0))
    throw DomainError("ensemble: w and tau must be in [0, 1]");
  return m;
}

}  // namespace nbo
