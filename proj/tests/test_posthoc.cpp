#include "doctest.h"

#include <cmath>

#include "gduq/errors.hpp"
#include "gduq/metrics.hpp"
#include "gduq/posthoc.hpp"
#include "gduq/rng.hpp"

using namespace gduq;

namespace {

// Calibrated-by-construction binary logits: gap ln(3) puts the top-class
// probability at 0.75, and a 3:1 correct/incorrect mix makes T=1 the NLL
// stationary point.
void calibrated_batch(Matrix* logits, std::vector<int>* labels, int copies = 4) {
  const double gap = std::log(3.0);
  const std::size_t n = static_cast<std::size_t>(4 * copies);
  *logits = Matrix(n, 2, 0.0);
  labels->assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    (*logits)(i, 0) = gap;
    (*logits)(i, 1) = 0.0;
    (*labels)[i] = (i % 4 == 3) ? 1 : 0;  // one of four lands off-class
  }
}

Matrix scale_logits(const Matrix& logits, double c) {
  Matrix out = logits;
  for (auto& v : out.data) v *= c;
  return out;
}

}  // namespace

TEST_SUITE("posthoc") {

TEST_CASE("temperature fit recovers T=1 on a calibrated construction") {
  Matrix logits;
  std::vector<int> labels;
  calibrated_batch(&logits, &labels);
  const TemperatureScaler s = fit_temperature(logits, labels);
  CHECK(std::abs(s.temperature - 1.0) < 1e-3);
  CHECK_FALSE(s.hit_bound);
}

TEST_CASE("scaling logits by 10 scales the fitted temperature by 10") {
  Matrix logits;
  std::vector<int> labels;
  calibrated_batch(&logits, &labels);
  const Matrix overconfident = scale_logits(logits, 10.0);
  const TemperatureScaler s = fit_temperature(overconfident, labels);
  CHECK(std::abs(s.temperature - 10.0) / 10.0 < 0.02);
}

TEST_CASE("a bound hit emits the boundary value") {
  // All-correct, tiny margins: NLL keeps falling as T shrinks, so the search
  // slams into the lower bound exp(-3).
  Matrix logits(6, 2, 0.0);
  std::vector<int> labels(6, 0);
  for (std::size_t i = 0; i < 6; ++i) {
    logits(i, 0) = 0.05;
    labels[i] = i == 5 ? 1 : 0;  // keep two classes present
  }
  logits(5, 0) = -0.05;
  const TemperatureScaler s = fit_temperature(logits, labels);
  CHECK(s.hit_bound);
  CHECK((std::abs(s.temperature - std::exp(-3.0)) < 1e-9 ||
         std::abs(s.temperature - std::exp(3.0)) < 1e-9));
}

TEST_CASE("fitting never worsens the unscaled validation NLL") {
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 20, q = 3;
    Matrix logits(n, q, 0.0);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < q; ++j) logits(i, j) = rng.normal(0.0, 2.0);
      labels[i] = static_cast<int>(rng.uniform_below(q));
    }
    const TemperatureScaler s = fit_temperature(logits, labels);
    Matrix scaled = scale_logits(logits, 1.0 / s.temperature);
    CHECK(mean_nll(scaled, labels) <= mean_nll(logits, labels) + 1e-9);
  }
}

TEST_CASE("degenerate single-class validation is rejected") {
  Matrix logits(4, 2, 0.0);
  const std::vector<int> labels(4, 0);
  CHECK_THROWS_AS(fit_temperature(logits, labels), DataError);
}

TEST_CASE("apply with T=1 is the plain softmax") {
  Rng rng(7);
  Matrix logits(5, 4, 0.0);
  for (auto& v : logits.data) v = rng.normal();
  const TemperatureScaler identity{1.0, false};
  const Matrix probs = apply_temperature(identity, logits);
  for (std::size_t i = 0; i < 5; ++i) {
    double mx = logits(i, 0);
    for (std::size_t j = 1; j < 4; ++j) mx = std::max(mx, logits(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < 4; ++j) denom += std::exp(logits(i, j) - mx);
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(probs(i, j) == doctest::Approx(std::exp(logits(i, j) - mx) / denom).epsilon(1e-15));
  }
}

TEST_CASE("huge temperatures flatten the distribution") {
  Rng rng(8);
  Matrix logits(6, 5, 0.0);
  for (auto& v : logits.data) v = rng.uniform(-2.0, 2.0);
  const TemperatureScaler hot{1e6, false};
  const Matrix probs = apply_temperature(hot, logits);
  for (std::size_t i = 0; i < 6; ++i) {
    double mx = probs(i, 0), mn = probs(i, 0);
    for (std::size_t j = 1; j < 5; ++j) {
      mx = std::max(mx, probs(i, j));
      mn = std::min(mn, probs(i, j));
    }
    CHECK(mx - mn < 1e-5);
  }
}

TEST_CASE("temperature scaling preserves the argmax") {
  Rng rng(9);
  for (const double t : {0.1, 1.0, 10.0}) {
    Matrix logits(8, 4, 0.0);
    for (auto& v : logits.data) v = rng.normal();
    const Matrix probs = apply_temperature(TemperatureScaler{t, false}, logits);
    for (std::size_t i = 0; i < 8; ++i)
      CHECK(argmax_lowest(probs.row(i)) == argmax_lowest(logits.row(i)));
  }
}

TEST_CASE("vector scaling at identity parameters is plain softmax") {
  Rng rng(10);
  Matrix logits(5, 3, 0.0);
  for (auto& v : logits.data) v = rng.normal();
  VectorScaler identity{{1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}};
  const Matrix via_scaler = apply_vector_scaling(identity, logits);
  const Matrix via_temp = apply_temperature(TemperatureScaler{1.0, false}, logits);
  for (std::size_t i = 0; i < via_scaler.data.size(); ++i)
    CHECK(via_scaler.data[i] == doctest::Approx(via_temp.data[i]).epsilon(1e-15));
}

TEST_CASE("vector scaling never returns anything worse than its init") {
  Matrix logits;
  std::vector<int> labels;
  calibrated_batch(&logits, &labels, 2);
  const VectorScaler s = fit_vector_scaling(logits, labels);
  const double base = mean_nll(logits, labels);
  Matrix scaled(logits.rows, logits.cols, 0.0);
  for (std::size_t i = 0; i < logits.rows; ++i)
    for (std::size_t j = 0; j < logits.cols; ++j)
      scaled(i, j) = logits(i, j) * s.w[j] + s.b[j];
  CHECK(mean_nll(scaled, labels) <= base + 1e-9);
}

TEST_CASE("vector scaling compensates a uniform class offset") {
  // Binary logits where class 1's logit carries a +2 bias relative to a
  // calibrated construction; the fitted b should recover most of the gap to
  // the offset-free NLL.
  Matrix logits;
  std::vector<int> labels;
  calibrated_batch(&logits, &labels, 8);
  const double clean_nll = mean_nll(logits, labels);
  Matrix offset = logits;
  for (std::size_t i = 0; i < offset.rows; ++i) offset(i, 1) += 2.0;
  const VectorScaler s = fit_vector_scaling(offset, labels, 2000, 0.05);
  Matrix fixed(offset.rows, offset.cols, 0.0);
  for (std::size_t i = 0; i < offset.rows; ++i)
    for (std::size_t j = 0; j < offset.cols; ++j)
      fixed(i, j) = offset(i, j) * s.w[j] + s.b[j];
  CHECK(mean_nll(fixed, labels) <= clean_nll + 1e-3);
}

TEST_CASE("vector scaling enforces the 2q sample floor") {
  Matrix logits(3, 2, 0.0);
  const std::vector<int> labels = {0, 1, 0};
  CHECK_THROWS_AS(fit_vector_scaling(logits, labels), std::invalid_argument);
}

}  // TEST_SUITE

#include "gduq/anchoring.hpp"
#include "gduq/model.hpp"

TEST_SUITE("posthoc") {

TEST_CASE("temperature scaling does not worsen fitting-set ece beyond 0.02 across seeds") {
  // Statistical property on generated data: scale the id_val logits of a
  // trained model and compare binned calibration on the same set.
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    GeneratorConfig gen;
    gen.task = TaskKind::GraphClassification;
    gen.num_graphs = 80;
    gen.base_structures = {BaseStructure::Path};
    gen.motifs = {MotifKind::Triangle, MotifKind::Star};
    gen.size_range = {7, 12};
    gen.feature_dim = 4;
    gen.spurious_feature_strength = 0.5;
    gen.ood_spurious_strength = 0.5;
    gen.seed = seed;
    const DatasetSplits data = gen_motif_dataset(gen);
    ModelSpec spec;
    spec.backbone = Backbone::GIN;
    spec.num_mp_layers = 2;
    spec.hidden_dim = 8;
    spec.mlp_head_layers = 2;
    spec.num_classes = 2;
    spec.task = TaskKind::GraphClassification;
    spec.input_dim = 4;
    const TrainConfig tc{40, 16, 3e-3, seed};
    const TrainResult r = train(spec, data, tc);
    const Params view = detach_params(r.params);

    Matrix logits(data.id_val.size(), 2, 0.0);
    std::vector<int> labels;
    for (std::size_t i = 0; i < data.id_val.size(); ++i) {
      logits.set_row(i, forward_logits(spec, view, data.id_val[i]).values());
      labels.push_back(*data.id_val[i].graph_label);
    }
    const TemperatureScaler scaler = fit_temperature(logits, labels);
    const Matrix raw_probs = apply_temperature(TemperatureScaler{1.0, false}, logits);
    const Matrix cal_probs = apply_temperature(scaler, logits);
    std::vector<PredictionRecord> raw_records, cal_records;
    for (std::size_t i = 0; i < logits.rows; ++i) {
      raw_records.push_back(make_record(raw_probs.row(i), labels[i]));
      cal_records.push_back(make_record(cal_probs.row(i), labels[i]));
    }
    CHECK(ece(cal_records) <= ece(raw_records) + 0.02);
  }
}

}  // TEST_SUITE
