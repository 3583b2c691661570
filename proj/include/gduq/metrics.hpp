#pragma once

#include <cstddef>
#include <vector>

namespace gduq {

// One evaluated sample: probability vector, ground truth, and the maximum
// softmax probability used as the confidence / detection / GEP score.
struct PredictionRecord {
  std::vector<double> probs;
  int label = 0;
  bool correct = false;
  double confidence = 0.0;
};

// Argmax with lowest-index tie break.
std::size_t argmax_lowest(const std::vector<double>& v);

PredictionRecord make_record(std::vector<double> probs, int label);

double accuracy(const std::vector<PredictionRecord>& records);

// Top-1 expected calibration error over uniform confidence bins; bin weight
// is the fraction of records in the bin, confidence 1.0 lands in the top bin.
double ece(const std::vector<PredictionRecord>& records, int n_bins = 15);

// Probability that an ID sample outscores an OOD one, ties counted half
// (Mann-Whitney). Higher score means more in-distribution.
double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores);

// Threshold minimizing |val accuracy - fraction of scores strictly above tau|
// over midpoints of sorted unique confidences plus {0, 1}; lowest tau wins ties.
double tune_gep_threshold(const std::vector<PredictionRecord>& val_records);

double gep_error(const std::vector<PredictionRecord>& target_records, double true_acc, double tau);

}  // namespace gduq
