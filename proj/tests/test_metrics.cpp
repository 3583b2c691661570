#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "gduq/metrics.hpp"
#include "gduq/rng.hpp"

using namespace gduq;

namespace {

// Independent explicit-binning oracle: sort records into bins one by one and
// sum the weighted gaps directly.
double ece_oracle(const std::vector<PredictionRecord>& records, int n_bins) {
  std::vector<std::vector<const PredictionRecord*>> bins(static_cast<std::size_t>(n_bins));
  for (const auto& r : records) {
    auto idx = static_cast<std::size_t>(r.confidence * n_bins);
    if (idx >= bins.size()) idx = bins.size() - 1;
    bins[idx].push_back(&r);
  }
  double total = 0.0;
  for (const auto& bin : bins) {
    if (bin.empty()) continue;
    double conf = 0.0, acc = 0.0;
    for (const auto* r : bin) {
      conf += r->confidence;
      acc += r->correct ? 1.0 : 0.0;
    }
    conf /= static_cast<double>(bin.size());
    acc /= static_cast<double>(bin.size());
    total += static_cast<double>(bin.size()) / static_cast<double>(records.size()) *
             std::abs(acc - conf);
  }
  return total;
}

// All-pairs enumeration oracle for AUROC with half-weight ties.
double auroc_oracle(const std::vector<double>& id_scores, const std::vector<double>& ood) {
  double wins = 0.0;
  for (const double a : id_scores)
    for (const double b : ood) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return wins / (static_cast<double>(id_scores.size()) * static_cast<double>(ood.size()));
}

std::vector<PredictionRecord> random_records(std::size_t n, std::size_t q, Rng& rng) {
  std::vector<PredictionRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p(q);
    double total = 0.0;
    for (auto& v : p) {
      v = rng.uniform(0.001, 1.0);
      total += v;
    }
    for (auto& v : p) v /= total;
    records.push_back(make_record(p, static_cast<int>(rng.uniform_below(q))));
  }
  return records;
}

PredictionRecord record_with_confidence(double conf, bool correct) {
  // Twelve-way vector whose maximum sits at index 0 with value conf; valid
  // for conf >= 1/12 (the other entries share the remainder).
  std::vector<double> p(12, (1.0 - conf) / 11.0);
  p[0] = conf;
  return make_record(p, correct ? 0 : 1);
}

}  // namespace

TEST_SUITE("uq-metrics") {

TEST_CASE("records compute argmax with lowest-index tie break") {
  const PredictionRecord r = make_record({0.4, 0.4, 0.2}, 0);
  CHECK(r.correct);
  CHECK(r.confidence == 0.4);
  const PredictionRecord r2 = make_record({0.4, 0.4, 0.2}, 1);
  CHECK_FALSE(r2.correct);
}

TEST_CASE("accuracy counts correct fractions") {
  std::vector<PredictionRecord> rs = {record_with_confidence(0.9, true),
                                      record_with_confidence(0.8, true),
                                      record_with_confidence(0.7, true),
                                      record_with_confidence(0.6, false)};
  CHECK(accuracy(rs) == 0.75);
  std::vector<PredictionRecord> all = {record_with_confidence(0.9, true)};
  CHECK(accuracy(all) == 1.0);
  std::vector<PredictionRecord> none = {record_with_confidence(0.9, false)};
  CHECK(accuracy(none) == 0.0);
  CHECK_THROWS_AS(accuracy({}), std::invalid_argument);
}

TEST_CASE("perfectly sharp and correct predictions have zero ece") {
  std::vector<PredictionRecord> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(record_with_confidence(1.0, true));
  CHECK(ece(rs) == 0.0);
}

TEST_CASE("ece of the worked single-bin example is 0.15") {
  std::vector<PredictionRecord> rs = {
      record_with_confidence(0.9, true), record_with_confidence(0.9, true),
      record_with_confidence(0.9, true), record_with_confidence(0.9, false)};
  CHECK(ece(rs) == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("ece equals the explicit-binning oracle on random records") {
  Rng rng(100);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.uniform_below(60);
    const std::size_t q = 2 + rng.uniform_below(4);
    const auto rs = random_records(n, q, rng);
    const int bins = 1 + static_cast<int>(rng.uniform_below(20));
    CHECK(std::abs(ece(rs, bins) - ece_oracle(rs, bins)) < 1e-12);
    const double e = ece(rs, bins);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
}

TEST_CASE("confidence exactly 1.0 lands in the top bin") {
  std::vector<PredictionRecord> rs = {record_with_confidence(1.0, false)};
  CHECK(ece(rs, 15) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("auroc separates, ties, and matches the worked example") {
  CHECK(auroc({0.9, 0.8}, {0.2, 0.1}) == 1.0);
  CHECK(auroc({0.5, 0.5}, {0.5, 0.5}) == 0.5);
  CHECK(auroc({0.9, 0.4}, {0.5, 0.1}) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(auroc({}, {0.1}), std::invalid_argument);
  CHECK_THROWS_AS(auroc({0.1}, {}), std::invalid_argument);
}

TEST_CASE("auroc equals all-pairs enumeration on random score sets") {
  Rng rng(200);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n1 = 1 + rng.uniform_below(40);
    const std::size_t n2 = 1 + rng.uniform_below(40);
    std::vector<double> a(n1), b(n2);
    // Coarse grid scores force plenty of ties.
    for (auto& v : a) v = static_cast<double>(rng.uniform_below(8)) / 8.0;
    for (auto& v : b) v = static_cast<double>(rng.uniform_below(8)) / 8.0;
    CHECK(auroc(a, b) == doctest::Approx(auroc_oracle(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("auroc is invariant under joint monotone transforms") {
  Rng rng(300);
  std::vector<double> a(25), b(30);
  for (auto& v : a) v = rng.uniform01();
  for (auto& v : b) v = rng.uniform01();
  const double base = auroc(a, b);
  auto ta = a, tb = b;
  for (auto& v : ta) v = std::exp(3.0 * v + 1.0);
  for (auto& v : tb) v = std::exp(3.0 * v + 1.0);
  CHECK(auroc(ta, tb) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("auroc swaps to its complement without ties") {
  Rng rng(400);
  std::vector<double> a(20), b(20);
  for (auto& v : a) v = rng.uniform01();
  for (auto& v : b) v = rng.uniform01();
  CHECK(auroc(a, b) == doctest::Approx(1.0 - auroc(b, a)).epsilon(1e-12));
}

TEST_CASE("gep threshold tie-break returns the lowest tau") {
  std::vector<PredictionRecord> rs;
  for (int i = 0; i < 5; ++i) rs.push_back(record_with_confidence(0.9, true));
  CHECK(tune_gep_threshold(rs) == 0.0);
}

TEST_CASE("gep threshold finds the midpoint on the worked example") {
  // Confidences {0.2, 0.8}, the high one correct: tau = 0.5 gives predicted
  // accuracy 0.5 matching the true accuracy, error 0.
  std::vector<PredictionRecord> rs = {record_with_confidence(0.8, true),
                                      record_with_confidence(0.2, false)};
  CHECK(tune_gep_threshold(rs) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("gep threshold matches exhaustive enumeration on random records") {
  Rng rng(500);
  for (int trial = 0; trial < 40; ++trial) {
    const auto rs = random_records(3 + rng.uniform_below(40), 3, rng);
    const double tau = tune_gep_threshold(rs);
    // Oracle: evaluate every candidate directly.
    std::vector<double> confs;
    for (const auto& r : rs) confs.push_back(r.confidence);
    std::sort(confs.begin(), confs.end());
    confs.erase(std::unique(confs.begin(), confs.end()), confs.end());
    std::vector<double> candidates = {0.0, 1.0};
    for (std::size_t i = 0; i + 1 < confs.size(); ++i)
      candidates.push_back(0.5 * (confs[i] + confs[i + 1]));
    std::sort(candidates.begin(), candidates.end());
    const double acc = accuracy(rs);
    double best_tau = 0.0, best_err = 2.0;
    for (const double t : candidates) {
      std::size_t above = 0;
      for (const auto& r : rs) above += r.confidence > t ? 1 : 0;
      const double err = std::abs(acc - static_cast<double>(above) / static_cast<double>(rs.size()));
      if (err < best_err) {
        best_err = err;
        best_tau = t;
      }
    }
    CHECK(tau == best_tau);
  }
}

TEST_CASE("predicted accuracy is non-increasing in tau") {
  Rng rng(600);
  const auto rs = random_records(50, 2, rng);
  double prev = 2.0;
  for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
    std::size_t above = 0;
    for (const auto& r : rs) above += r.confidence > tau ? 1 : 0;
    const double frac = static_cast<double>(above) / static_cast<double>(rs.size());
    CHECK(frac <= prev);
    prev = frac;
  }
}

TEST_CASE("gep error worked examples") {
  std::vector<PredictionRecord> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(record_with_confidence(0.9, i < 8));
  CHECK(gep_error(rs, 1.0, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gep_error(rs, 0.8, 1.0) == doctest::Approx(0.8).epsilon(1e-15));

  std::vector<PredictionRecord> mixed;
  for (int i = 0; i < 10; ++i) mixed.push_back(record_with_confidence(i < 6 ? 0.9 : 0.1, true));
  CHECK(gep_error(mixed, 0.8, 0.5) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("gep error is 1-lipschitz in the true accuracy") {
  Rng rng(700);
  const auto rs = random_records(30, 2, rng);
  for (int trial = 0; trial < 30; ++trial) {
    const double tau = rng.uniform01();
    const double a1 = rng.uniform01(), a2 = rng.uniform01();
    CHECK(std::abs(gep_error(rs, a1, tau) - gep_error(rs, a2, tau)) <= std::abs(a1 - a2) + 1e-15);
  }
}

}  // TEST_SUITE
