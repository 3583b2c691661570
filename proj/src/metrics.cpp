#include "gduq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gduq {

std::size_t argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

PredictionRecord make_record(std::vector<double> probs, int label) {
  if (probs.empty()) throw std::invalid_argument("make_record: empty probability vector");
  PredictionRecord r;
  const std::size_t top = argmax_lowest(probs);
  r.correct = static_cast<int>(top) == label;
  r.confidence = probs[top];
  r.probs = std::move(probs);
  r.label = label;
  return r;
}

double accuracy(const std::vector<PredictionRecord>& records) {
  if (records.empty()) throw std::invalid_argument("accuracy: no records");
  std::size_t hits = 0;
  for (const auto& r : records) hits += r.correct ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double ece(const std::vector<PredictionRecord>& records, int n_bins) {
  if (records.empty()) throw std::invalid_argument("ece: no records");
  if (n_bins < 1) throw std::invalid_argument("ece: n_bins must be >= 1");
  const std::size_t b = static_cast<std::size_t>(n_bins);
  std::vector<std::size_t> count(b, 0);
  std::vector<double> conf_sum(b, 0.0), acc_sum(b, 0.0);
  for (const auto& r : records) {
    std::size_t bin = static_cast<std::size_t>(r.confidence * static_cast<double>(b));
    if (bin >= b) bin = b - 1;  // confidence exactly 1.0 goes to the top bin
    count[bin] += 1;
    conf_sum[bin] += r.confidence;
    acc_sum[bin] += r.correct ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(records.size());
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (count[i] == 0) continue;
    const double c = static_cast<double>(count[i]);
    total += (c / n) * std::abs(acc_sum[i] / c - conf_sum[i] / c);
  }
  return total;
}

double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores) {
  if (id_scores.empty() || ood_scores.empty())
    throw std::invalid_argument("auroc: both score lists must be nonempty");
  // Midrank formulation of the Mann-Whitney U statistic.
  struct Entry {
    double score;
    bool is_id;
  };
  std::vector<Entry> all;
  all.reserve(id_scores.size() + ood_scores.size());
  for (const double s : id_scores) all.push_back({s, true});
  for (const double s : ood_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

  double id_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (all[t].is_id) id_rank_sum += midrank;
    i = j;
  }
  const double n1 = static_cast<double>(id_scores.size());
  const double n2 = static_cast<double>(ood_scores.size());
  const double u = id_rank_sum - n1 * (n1 + 1.0) / 2.0;
  return u / (n1 * n2);
}

double tune_gep_threshold(const std::vector<PredictionRecord>& val_records) {
  if (val_records.empty()) throw std::invalid_argument("tune_gep_threshold: no records");
  const double acc = accuracy(val_records);

  std::vector<double> confs;
  confs.reserve(val_records.size());
  for (const auto& r : val_records) confs.push_back(r.confidence);
  std::sort(confs.begin(), confs.end());
  confs.erase(std::unique(confs.begin(), confs.end()), confs.end());

  std::vector<double> candidates = {0.0, 1.0};
  for (std::size_t i = 0; i + 1 < confs.size(); ++i)
    candidates.push_back(0.5 * (confs[i] + confs[i + 1]));
  std::sort(candidates.begin(), candidates.end());

  double best_tau = candidates.front();
  double best_err = -1.0;
  for (const double tau : candidates) {
    std::size_t above = 0;
    for (const auto& r : val_records) above += r.confidence > tau ? 1 : 0;
    const double err =
        std::abs(acc - static_cast<double>(above) / static_cast<double>(val_records.size()));
    if (best_err < 0.0 || err < best_err) {  // strict: lowest tau wins ties
      best_err = err;
      best_tau = tau;
    }
  }
  return best_tau;
}

double gep_error(const std::vector<PredictionRecord>& target_records, double true_acc,
                 double tau) {
  if (target_records.empty()) throw std::invalid_argument("gep_error: no records");
  std::size_t above = 0;
  for (const auto& r : target_records) above += r.confidence > tau ? 1 : 0;
  return std::abs(true_acc -
                  static_cast<double>(above) / static_cast<double>(target_records.size()));
}

}  // namespace gduq
