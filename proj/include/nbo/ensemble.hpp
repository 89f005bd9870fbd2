// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace nbo {

/// Blend weight and decision threshold, plus the calibration metadata that
/// goes into the engine snapshot.
struct EnsembleModel {
  double w = 0.5;    // weight on the GBDT probability
  double tau = 0.5;  // offer decision threshold
  double grid_step_w = 0.01;
  double grid_step_tau = 0.001;
  double auc = 0.0;
  double fscore = 0.0;
  bool calibrated = false;
};

/// w * p_gbdt + (1 - w) * p_lstm, kept in [0, 1]. Throws DomainError on
/// out-of-range inputs.
double ensemble_score(double p_gbdt, double p_lstm, double w);

/// true iff score >= tau.
bool decide(double score, double tau);

struct WeightCalibration {
  double w = 0.0;
  double auc = 0.0;
};

/// Exhaustive grid search for the blend weight maximizing AUC over
/// w in {0, step, 2*step, ..., 1}; ties go to the smallest w. Throws
/// DomainError when labels are single-class (AUC undefined).
WeightCalibration calibrate_weight(std::span<const double> p_gbdt,
                                   std::span<const double> p_lstm,
                                   std::span<const int> labels,
                                   double grid_step = 0.01);

struct ThresholdCalibration {
  double tau = 0.0;
  double fscore = 0.0;
};

/// Exhaustive grid search for the threshold maximizing F1 of
/// (score >= tau); ties go to the largest tau (most conservative policy).
ThresholdCalibration calibrate_threshold(std::span<const double> scores,
                                         std::span<const int> labels,
                                         double grid_step = 0.001);

/// Grid points k*step for k = 0..K-1 with the final point pinned to exactly
/// 1.0. Shared by both calibrations so tests can enumerate the same grid.
std::vector<double> calibration_grid(double step);

nlohmann::json ensemble_to_json(const EnsembleModel& m);
EnsembleModel ensemble_from_json(const nlohmann::json& j);

}  // namespace nbo
