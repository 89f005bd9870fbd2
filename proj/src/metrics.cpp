// SPDX-License-Identifier: Apache-2.0
#include "nbo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "nbo/errors.hpp"

namespace nbo {

ConfusionCounts confusion(std::span<const int> preds,
                          std::span<const int> labels) {
  if (preds.size() != labels.size())
    throw DimensionError("confusion: preds and labels differ in length");
  ConfusionCounts c;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i]) {
      labels[i] ? ++c.tp : ++c.fp;
    } else {
      labels[i] ? ++c.fn : ++c.tn;
    }
  }
  return c;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw DimensionError("auc: scores and labels differ in length");
  if (scores.empty()) throw DomainError("auc: empty input");

  // Sort once and sweep tie groups; concordant/tied pair counts are exact
  // integers, so the result is identical to the all-pairs loop.
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  uint64_t n_pos = 0, n_neg = 0;
  for (int l : labels) l ? ++n_pos : ++n_neg;
  if (n_pos == 0 || n_neg == 0)
    throw DomainError("auc: undefined for single-class labels");

  uint64_t concordant = 0, tied = 0, neg_below = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    uint64_t pos_here = 0, neg_here = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      labels[order[j]] ? ++pos_here : ++neg_here;
      ++j;
    }
    concordant += pos_here * neg_below;
    tied += pos_here * neg_here;
    neg_below += neg_here;
    i = j;
  }
  return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

PrecisionRecallF1 f_score(std::span<const int> preds,
                          std::span<const int> labels) {
  if (preds.empty()) throw DomainError("f_score: empty input");
  const ConfusionCounts c = confusion(preds, labels);
  PrecisionRecallF1 r;
  r.precision = (c.tp + c.fp) ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  r.recall = (c.tp + c.fn) ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  r.f1 = (r.precision + r.recall > 0.0)
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

std::vector<double> percentiles(std::vector<double> values,
                                std::span<const double> ps) {
  if (values.empty()) throw DomainError("percentiles: empty input");
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  out.reserve(ps.size());
  const double n = static_cast<double>(values.size());
  for (double p : ps) {
    if (p < 0.0 || p > 100.0)
      throw DomainError("percentiles: p must be in [0, 100]");
    size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * n));
    if (rank < 1) rank = 1;
    out.push_back(values[rank - 1]);
  }
  return out;
}

double percentile(std::vector<double> values, double p) {
  return percentiles(std::move(values), std::span<const double>(&p, 1))[0];
}

double recommend_throughput_model(unsigned cores_msg, unsigned cores_infr,
                                  double t7_s, double t8_s, double t10_s) {
  if (cores_msg == 0 || cores_infr == 0)
    throw DomainError("throughput model: core counts must be positive");
  if (t7_s + t8_s <= 0.0 || t10_s <= 0.0)
    throw DomainError("throughput model: stage times must be positive");
  const double msg_rate = static_cast<double>(cores_msg) / (t7_s + t8_s);
  const double infr_rate = static_cast<double>(cores_infr) / t10_s;
  return std::min(msg_rate, infr_rate);
}

double featureupdate_throughput_model(double process_time_s,
                                      unsigned numcores) {
  if (numcores == 0)
    throw DomainError("throughput model: core count must be positive");
  if (process_time_s <= 0.0)
    throw DomainError("throughput model: process time must be positive");
  return static_cast<double>(numcores) / process_time_s;
}

}  // namespace nbo
