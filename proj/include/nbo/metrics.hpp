// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nbo {

struct ConfusionCounts {
  uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

ConfusionCounts confusion(std::span<const int> preds,
                          std::span<const int> labels);

/// Area under the ROC curve as the Mann-Whitney rank statistic:
/// (#concordant positive/negative pairs + 0.5 * #tied pairs) / (P * N).
/// Exact with ties; invariant under strictly increasing score transforms.
/// Throws DomainError if labels are single-class (AUC undefined).
double auc(std::span<const double> scores, std::span<const int> labels);

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision, recall and F1. Each metric is defined as 0 when its
/// denominator is 0.
PrecisionRecallF1 f_score(std::span<const int> preds,
                          std::span<const int> labels);

/// Nearest-rank percentiles: sort ascending, 1-based index = ceil(p/100 * N).
/// Throws DomainError on an empty input.
std::vector<double> percentiles(std::vector<double> values,
                                std::span<const double> ps);
double percentile(std::vector<double> values, double p);

/// Analytic peak rate of the request/response path:
/// min(cores_msg / (t7 + t8), cores_infr / t10), in messages per second
/// for stage times in seconds.
double recommend_throughput_model(unsigned cores_msg, unsigned cores_infr,
                                  double t7_s, double t8_s, double t10_s);

/// Analytic peak rate of the update path: numcores / process_time.
double featureupdate_throughput_model(double process_time_s,
                                      unsigned numcores);

}  // namespace nbo
