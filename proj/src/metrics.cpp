#include "daln/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "daln/errors.hpp"
#include "daln/kernels.hpp"
#include "json.hpp"

namespace daln {

namespace {

int argmax_row(const Matrix& m, int row) {
  int arg = 0;
  for (int j = 1; j < m.cols(); ++j)
    if (m(row, j) > m(row, arg)) arg = j;
  return arg;
}

void require_labels(const Matrix& preds, const std::vector<int>& labels,
                    const char* who) {
  if (preds.rows() == 0)
    throw ValueError(std::string(who) + ": empty predictions");
  if (static_cast<int>(labels.size()) != preds.rows())
    throw ShapeError(std::string(who) + ": " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(preds.rows()) + " rows");
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= preds.cols())
      throw ValueError(std::string(who) + ": label " +
                       std::to_string(labels[i]) + " at row " +
                       std::to_string(i) + " outside [0, " +
                       std::to_string(preds.cols()) + ")");
}

double sigmoid_stable(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

SelfCorrelation self_correlation(const Matrix& z) {
  if (z.rows() == 0 || z.cols() == 0)
    throw ValueError("self_correlation: empty predictions");
  const double tol = 1e-9;
  for (int i = 0; i < z.rows(); ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < z.cols(); ++j) {
      if (z(i, j) < -tol)
        throw ValueError("self_correlation: negative probability at row " +
                         std::to_string(i));
      row_sum += z(i, j);
    }
    if (std::abs(row_sum - 1.0) > tol)
      throw ValueError("self_correlation: row " + std::to_string(i) +
                       " sums to " + std::to_string(row_sum));
  }
  SelfCorrelation out{Matrix(z.cols(), z.cols()), 0.0, 0.0, z.rows()};
  kernels::matmul_acc_tn(out.r, z, z);
  double total = 0.0;
  for (int i = 0; i < out.r.rows(); ++i) {
    out.i_a += out.r(i, i);
    for (int j = 0; j < out.r.cols(); ++j) total += out.r(i, j);
  }
  out.i_e = total - out.i_a;
  return out;
}

ClassificationEval confusion_and_accuracy(const Matrix& preds,
                                          const std::vector<int>& labels) {
  require_labels(preds, labels, "confusion_and_accuracy");
  const int k = preds.cols();
  ClassificationEval out{Matrix(k, k), 0.0, std::vector<double>(k, 0.0)};
  std::vector<int> support(k, 0);
  int correct = 0;
  for (int i = 0; i < preds.rows(); ++i) {
    const int truth = labels[i];
    const int guess = argmax_row(preds, i);
    out.confusion(truth, guess) += 1.0;
    support[truth]++;
    if (guess == truth) correct++;
  }
  out.accuracy = static_cast<double>(correct) / preds.rows();
  for (int c = 0; c < k; ++c)
    if (support[c] > 0) out.per_class_recall[c] = out.confusion(c, c) / support[c];
  return out;
}

double determinacy_ratio(const Matrix& preds, const std::vector<int>& labels,
                         double low) {
  require_labels(preds, labels, "determinacy_ratio");
  int correct = 0;
  int confident = 0;
  for (int i = 0; i < preds.rows(); ++i) {
    const int guess = argmax_row(preds, i);
    if (guess != labels[i]) continue;
    correct++;
    if (preds(i, guess) >= low) confident++;
  }
  if (correct == 0) return 0.0;
  return static_cast<double>(confident) / correct;
}

std::vector<int> per_class_correct(const Matrix& preds,
                                   const std::vector<int>& labels) {
  require_labels(preds, labels, "per_class_correct");
  std::vector<int> counts(preds.cols(), 0);
  for (int i = 0; i < preds.rows(); ++i)
    if (argmax_row(preds, i) == labels[i]) counts[labels[i]]++;
  return counts;
}

double proxy_a_distance(const Matrix& feat_s, const Matrix& feat_t, int folds) {
  if (feat_s.rows() == 0 || feat_t.rows() == 0)
    throw ValueError("proxy_a_distance: empty domain");
  if (feat_s.cols() != feat_t.cols())
    throw ShapeError("proxy_a_distance: feature widths differ, " +
                     feat_s.shape_str() + " vs " + feat_t.shape_str());
  if (folds < 2) throw ValueError("proxy_a_distance: need at least 2 folds");
  if (feat_s.rows() < folds || feat_t.rows() < folds)
    throw ValueError("proxy_a_distance: a fold would hold less than one "
                     "sample from some domain");

  const int d = feat_s.cols();
  const double step = 0.1;
  const double l2 = 1e-4;
  int wrong = 0;
  int total = 0;
  for (int fold = 0; fold < folds; ++fold) {
    // round-robin fold assignment within each domain keeps splits mixed
    std::vector<const double*> train_x, test_x;
    std::vector<double> train_y, test_y;
    for (int i = 0; i < feat_s.rows(); ++i) {
      (i % folds == fold ? test_x : train_x).push_back(feat_s.row(i).data());
      (i % folds == fold ? test_y : train_y).push_back(0.0);
    }
    for (int i = 0; i < feat_t.rows(); ++i) {
      (i % folds == fold ? test_x : train_x).push_back(feat_t.row(i).data());
      (i % folds == fold ? test_y : train_y).push_back(1.0);
    }
    const int n = static_cast<int>(train_x.size());
    std::vector<double> w(d, 0.0);
    double bias = 0.0;
    std::vector<double> grad_w(d);
    for (int iter = 0; iter < 500; ++iter) {
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      double grad_b = 0.0;
      for (int i = 0; i < n; ++i) {
        double t = bias;
        for (int j = 0; j < d; ++j) t += train_x[i][j] * w[j];
        const double delta = sigmoid_stable(t) - train_y[i];
        for (int j = 0; j < d; ++j) grad_w[j] += delta * train_x[i][j];
        grad_b += delta;
      }
      for (int j = 0; j < d; ++j)
        w[j] -= step * (grad_w[j] / n + l2 * w[j]);
      bias -= step * grad_b / n;
    }
    for (size_t i = 0; i < test_x.size(); ++i) {
      double t = bias;
      for (int j = 0; j < d; ++j) t += test_x[i][j] * w[j];
      const double guess = sigmoid_stable(t) >= 0.5 ? 1.0 : 0.0;
      if (guess != test_y[i]) wrong++;
      total++;
    }
  }
  const double err = static_cast<double>(wrong) / total;
  return std::clamp(2.0 * (1.0 - 2.0 * err), 0.0, 2.0);
}

double median_sq_dist(const Matrix& feat_s, const Matrix& feat_t) {
  if (feat_s.cols() != feat_t.cols())
    throw ShapeError("median_sq_dist: feature widths differ, " +
                     feat_s.shape_str() + " vs " + feat_t.shape_str());
  const int m = feat_s.rows();
  const int n = feat_t.rows();
  Matrix pool(m + n, feat_s.cols());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < feat_s.cols(); ++j) pool(i, j) = feat_s(i, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < feat_t.cols(); ++j) pool(m + i, j) = feat_t(i, j);
  const Matrix dists = kernels::pairwise_sq_dists(pool, pool);
  std::vector<double> upper;
  upper.reserve(static_cast<size_t>(m + n) * (m + n - 1) / 2);
  for (int i = 0; i < dists.rows(); ++i)
    for (int j = i + 1; j < dists.cols(); ++j) upper.push_back(dists(i, j));
  if (upper.empty()) return 1.0;
  std::sort(upper.begin(), upper.end());
  const size_t mid = upper.size() / 2;
  const double median = upper.size() % 2 == 1
                            ? upper[mid]
                            : 0.5 * (upper[mid - 1] + upper[mid]);
  return median > 0.0 ? median : 1.0;
}

std::vector<double> default_bandwidths(const Matrix& feat_s,
                                       const Matrix& feat_t) {
  const double med = median_sq_dist(feat_s, feat_t);
  return {0.25 * med, 0.5 * med, med, 2.0 * med, 4.0 * med};
}

double mmd_rbf(const Matrix& feat_s, const Matrix& feat_t,
               const std::vector<double>& bandwidths) {
  if (feat_s.rows() < 2 || feat_t.rows() < 2)
    throw ValueError("mmd_rbf: need at least two samples per domain");
  if (feat_s.cols() != feat_t.cols())
    throw ShapeError("mmd_rbf: feature widths differ, " + feat_s.shape_str() +
                     " vs " + feat_t.shape_str());
  if (bandwidths.empty()) throw ValueError("mmd_rbf: empty bandwidth set");
  for (double bw : bandwidths)
    if (!(bw > 0.0)) throw ValueError("mmd_rbf: bandwidth must be positive");
  const double m = feat_s.rows();
  const double n = feat_t.rows();
  const Matrix d_ss = kernels::pairwise_sq_dists(feat_s, feat_s);
  const Matrix d_tt = kernels::pairwise_sq_dists(feat_t, feat_t);
  const Matrix d_st = kernels::pairwise_sq_dists(feat_s, feat_t);
  // equal-size clouds use the paired u-statistic (matched cross pairs
  // excluded) so identical clouds score exactly zero; otherwise the cross
  // term runs over all pairs
  const bool paired = feat_s.rows() == feat_t.rows();
  double total = 0.0;
  for (double bw : bandwidths) {
    total += kernels::rbf_sum(d_ss, bw, true) / (m * (m - 1.0));
    total += kernels::rbf_sum(d_tt, bw, true) / (n * (n - 1.0));
    if (paired)
      total -= 2.0 * kernels::rbf_sum(d_st, bw, true) / (m * (m - 1.0));
    else
      total -= 2.0 * kernels::rbf_sum(d_st, bw, false) / (m * n);
  }
  return total;
}

double mmd_rbf(const Matrix& feat_s, const Matrix& feat_t) {
  return mmd_rbf(feat_s, feat_t, default_bandwidths(feat_s, feat_t));
}

std::string to_json_line(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["epoch"] = report.epoch;
  j["accuracy"] = report.accuracy;
  j["per_class_recall"] = report.per_class_recall;
  auto rows = nlohmann::ordered_json::array();
  for (int i = 0; i < report.confusion.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (int c = 0; c < report.confusion.cols(); ++c)
      row.push_back(static_cast<long long>(report.confusion(i, c)));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  j["l_cls"] = report.l_cls;
  j["l_nwd"] = report.l_nwd;
  j["mmd"] = report.mmd;
  j["a_distance"] = report.a_distance;
  j["i_a_src"] = report.i_a_src;
  j["i_e_src"] = report.i_e_src;
  j["i_a_tgt"] = report.i_a_tgt;
  j["i_e_tgt"] = report.i_e_tgt;
  j["determinacy_ratio"] = report.determinacy_ratio;
  j["per_class_correct"] = report.per_class_correct;
  return j.dump();
}

}  // namespace daln
