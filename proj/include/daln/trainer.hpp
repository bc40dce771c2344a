#pragma once

#include <cstdint>
#include <vector>

#include "daln/data.hpp"
#include "daln/matrix.hpp"
#include "daln/metrics.hpp"
#include "daln/model.hpp"

namespace daln {

enum class TrainMode { kDaln, kDann, kDannNwd, kSourceOnly };

struct TrainConfig {
  int epochs = 100;
  int steps_per_epoch = 0;  // 0: auto, max(one source pass, 200)
  int batch_size = 36;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  double lr_classifier = 5e-3;
  double lr_extractor = 5e-4;  // one tenth of the classifier rate
  double lambda = 1.0;
  double gamma = 0.01;
  double grl_gamma = 10.0;
  double lr_alpha = 10.0;
  double lr_beta = 0.75;
  uint64_t seed = 0;
  TrainMode mode = TrainMode::kDaln;
  std::vector<int> hidden_dims = {16, 16, 8};
  Activation activation = Activation::kTanh;
};

/// Throws ValueError when a field is outside its domain.
void validate_config(const TrainConfig& config);

struct StepRecord {
  int step = 0;
  double lr = 0.0;  // scheduled classifier rate; the extractor uses its own
  double grl_coeff = 0.0;
  double l_cls = 0.0;
  double l_nwd = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<MetricsReport> epochs;
};

struct TrainResult {
  Model model;
  TrainLog log;
};

/// v ← momentum·v + grad + weight_decay·param; param ← param − lr·v.
void sgd_step(Matrix& param, const Matrix& grad, double lr, double momentum,
              double weight_decay, Matrix& velocity);

/// lr0 / (1 + alpha·p)^beta for progress p ∈ [0, 1].
double lr_schedule(double lr0, double progress, double alpha, double beta);

/// 2 / (1 + exp(−grl_gamma·p)) − 1: ramps from 0 toward 1.
double grl_schedule(double progress, double grl_gamma);

/// Full-dataset evaluation. Labels are required. Classification metrics are
/// always filled; the prediction self-correlation lands in the source or
/// target slots according to the dataset's domain tag. Cross-domain fields
/// (mmd, a_distance, losses) are left for the caller.
MetricsReport evaluate(const Model& m, const Dataset& ds);

/// Runs the configured number of epochs: each step draws one source and one
/// target mini-batch from per-epoch reshuffled cyclic iterators, backprops
/// the mode's objective once, and applies momentum SGD per parameter group
/// with the annealed learning rates. Epoch ends evaluate the full target set
/// (labels used only for reporting) plus the cross-domain diagnostics.
TrainResult train(const TrainConfig& config, const Dataset& source,
                  const Dataset& target);

}  // namespace daln
