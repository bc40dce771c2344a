#pragma once

#include <string>
#include <vector>

#include "daln/matrix.hpp"

namespace daln {

/// Gram matrix of a batch of probability rows, split into its diagonal mass
/// (confident, intra-class) and off-diagonal mass (inter-class confusion).
/// For b rows on the simplex the two masses always sum to at most b, with
/// equality exactly when every row is one-hot.
struct SelfCorrelation {
  Matrix r;     // k×k, ZᵀZ
  double i_a;   // trace of r
  double i_e;   // sum of off-diagonal entries of r
  int batch;    // number of rows b
};

/// Computes the self-correlation summary of a b×k prediction matrix.
/// Every row must lie on the probability simplex within 1e-9.
SelfCorrelation self_correlation(const Matrix& z);

/// Hard-decision quality of a prediction matrix against integer labels.
struct ClassificationEval {
  Matrix confusion;  // k×k counts, row = true class, column = predicted
  double accuracy;
  std::vector<double> per_class_recall;  // 0 for classes with no samples
};

/// Argmax evaluation with ties broken toward the lowest class index.
ClassificationEval confusion_and_accuracy(const Matrix& preds,
                                          const std::vector<int>& labels);

/// Fraction of correctly classified samples whose winning probability is at
/// least `low`; returns 0 when nothing is classified correctly.
double determinacy_ratio(const Matrix& preds, const std::vector<int>& labels,
                         double low = 0.9);

/// Number of correct predictions per true class.
std::vector<int> per_class_correct(const Matrix& preds,
                                   const std::vector<int>& labels);

/// Proxy A-distance between two feature clouds: 2·(1 − 2ε̂) clipped to [0, 2],
/// where ε̂ is the cross-validated error of a logistic separator labeling the
/// first cloud 0 and the second 1 (full-batch gradient descent, 500
/// iterations, step 0.1, L2 penalty 1e-4 on the weights). Folds are assigned
/// round-robin within each domain so every training split stays mixed.
double proxy_a_distance(const Matrix& feat_s, const Matrix& feat_t,
                        int folds = 2);

/// Median of the pooled pairwise squared distances between all distinct rows
/// of the two matrices stacked together (1.0 when the cloud is degenerate).
double median_sq_dist(const Matrix& feat_s, const Matrix& feat_t);

/// Multi-scale RBF bandwidths: the pooled median squared distance scaled by
/// {0.25, 0.5, 1, 2, 4}.
std::vector<double> default_bandwidths(const Matrix& feat_s,
                                       const Matrix& feat_t);

/// Unbiased squared maximum mean discrepancy under kernel exp(−d²/bw),
/// summed over the bandwidth set. Both clouds need at least two rows.
double mmd_rbf(const Matrix& feat_s, const Matrix& feat_t,
               const std::vector<double>& bandwidths);
double mmd_rbf(const Matrix& feat_s, const Matrix& feat_t);

/// Everything recorded about one evaluation pass, serialized as one JSON
/// object per line in a run's metrics log.
struct MetricsReport {
  int epoch = 0;
  double accuracy = 0.0;
  std::vector<double> per_class_recall;
  Matrix confusion;
  double l_cls = 0.0;
  double l_nwd = 0.0;
  double mmd = 0.0;
  double a_distance = 0.0;
  double i_a_src = 0.0;
  double i_e_src = 0.0;
  double i_a_tgt = 0.0;
  double i_e_tgt = 0.0;
  double determinacy_ratio = 0.0;
  std::vector<int> per_class_correct;
};

/// Single-line JSON rendering of a report (no trailing newline).
std::string to_json_line(const MetricsReport& report);

}  // namespace daln
