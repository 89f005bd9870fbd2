// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nbo/errors.hpp"
#include "nbo/metrics.hpp"
#include "nbo/rng.hpp"

using namespace nbo;

namespace {

double brute_force_auc(const std::vector<double>& scores,
                       const std::vector<int>& labels) {
  uint64_t concordant = 0, tied = 0, n_pos = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    ++n_pos;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j]) ++concordant;
      else if (scores[i] == scores[j]) ++tied;
    }
  }
  const uint64_t n_neg = scores.size() - n_pos;
  return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

TEST_CASE("auc: perfect, inverted and all-tied rankings") {
  CHECK(auc(std::vector{0.9, 0.1}, std::vector{1, 0}) == 1.0);
  CHECK(auc(std::vector{0.1, 0.9}, std::vector{1, 0}) == 0.0);
  CHECK(auc(std::vector{0.5, 0.5}, std::vector{1, 0}) == 0.5);
}

TEST_CASE("auc rejects single-class labels") {
  CHECK_THROWS_AS((void)auc(std::vector{0.1, 0.9}, std::vector{1, 1}),
                  DomainError);
  CHECK_THROWS_AS((void)auc(std::vector{0.1, 0.9}, std::vector{0, 0}),
                  DomainError);
}

TEST_CASE("auc equals the all-pairs statistic exactly") {
  Rng rng(101);
  for (int i = 0; i < 300; ++i) {
    const size_t n = 2 + rng.index(199);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (size_t k = 0; k < n; ++k) {
      scores[k] = rng.index(25) / 25.0;  // coarse values force tie handling
      labels[k] = rng.chance(0.35) ? 1 : 0;
    }
    labels[0] = 1;
    labels[n - 1] = 0;
    CHECK(auc(scores, labels) == brute_force_auc(scores, labels));
  }
}

TEST_CASE("auc complements under rank reversal on tie-free inputs") {
  Rng rng(103);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 64; ++i) {
    scores.push_back(i * 1e-3 + rng.uniform() * 1e-5);  // distinct
    labels.push_back(rng.chance(0.5) ? 1 : 0);
  }
  labels[0] = 1;
  labels[1] = 0;
  std::vector<double> negated(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) negated[i] = -scores[i];
  CHECK(auc(scores, labels) + auc(negated, labels) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  Rng rng(107);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) {
    scores.push_back(rng.index(30) / 30.0);
    labels.push_back(rng.chance(0.4) ? 1 : 0);
  }
  labels[0] = 1;
  labels[1] = 0;
  const double base = auc(scores, labels);
  auto transformed = [&](auto fn) {
    std::vector<double> out(scores.size());
    std::transform(scores.begin(), scores.end(), out.begin(), fn);
    return auc(out, labels);
  };
  CHECK(transformed([](double x) { return std::exp(x); }) == base);
  CHECK(transformed([](double x) { return x * x * x + 2 * x; }) == base);
  CHECK(transformed([](double x) { return 3.0 * x - 7.0; }) == base);
}

TEST_CASE("f_score: perfect, balanced and degenerate cases") {
  const auto perfect = f_score(std::vector{1, 0, 1}, std::vector{1, 0, 1});
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  // tp=1, fp=1, fn=1 -> precision = recall = f1 = 0.5
  const auto mixed = f_score(std::vector{1, 1, 0}, std::vector{1, 0, 1});
  CHECK(mixed.precision == 0.5);
  CHECK(mixed.recall == 0.5);
  CHECK(mixed.f1 == 0.5);

  const auto none = f_score(std::vector{0, 0}, std::vector{1, 1});
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
}

TEST_CASE("percentiles use the nearest-rank definition") {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(percentile(v, 90) == 9.0);  // ceil(0.9 * 10) = 9th value
  CHECK(percentile(v, 100) == 10.0);
  CHECK(percentile(v, 1) == 1.0);
  CHECK(percentile(std::vector{42.0}, 50) == 42.0);
  CHECK(percentile(std::vector{5.0, 5.0, 5.0}, 99) == 5.0);
  CHECK_THROWS_AS((void)percentile({}, 50), DomainError);
}

TEST_CASE("percentile is monotone in p and tops out at the maximum") {
  Rng rng(109);
  std::vector<double> v;
  for (int i = 0; i < 57; ++i) v.push_back(rng.uniform(0, 1000));
  double prev = -1;
  for (double p : {1.0, 10.0, 25.0, 50.0, 75.0, 90.0, 99.0, 100.0}) {
    const double q = percentile(v, p);
    CHECK(q >= prev);
    prev = q;
  }
  CHECK(percentile(v, 100) == *std::max_element(v.begin(), v.end()));
}

TEST_CASE("request-path throughput model reproduces the worked value") {
  // 4 message cores over 14.5 ms vs 2 inference cores over 10.52 ms.
  const double rate =
      recommend_throughput_model(4, 2, 0.014, 0.0005, 0.01052);
  CHECK(std::abs(rate - 190.11) / 190.11 < 0.001);

  // While inference-bound, doubling inference cores doubles the result.
  const double bound = recommend_throughput_model(40, 2, 0.014, 0.0005, 0.01052);
  const double twice = recommend_throughput_model(40, 4, 0.014, 0.0005, 0.01052);
  CHECK(twice == doctest::Approx(2 * bound).epsilon(1e-12));

  // Equal stage costs and cores: both terms coincide.
  CHECK(recommend_throughput_model(2, 2, 0.005, 0.005, 0.01) ==
        doctest::Approx(200.0).epsilon(1e-12));
}

TEST_CASE("update-path throughput model reproduces the worked value") {
  CHECK(std::abs(featureupdate_throughput_model(0.0073, 8) - 1095.9) / 1095.9 <
        0.001);
  CHECK(featureupdate_throughput_model(1.0, 1) == 1.0);
  CHECK(featureupdate_throughput_model(0.004, 8) ==
        doctest::Approx(2 * featureupdate_throughput_model(0.004, 4))
            .epsilon(1e-12));
}

TEST_CASE("throughput models reject degenerate inputs") {
  CHECK_THROWS_AS((void)recommend_throughput_model(0, 2, 0.1, 0.1, 0.1),
                  DomainError);
  CHECK_THROWS_AS((void)recommend_throughput_model(2, 2, 0.0, 0.0, 0.1),
                  DomainError);
  CHECK_THROWS_AS((void)featureupdate_throughput_model(0.0, 4), DomainError);
}
