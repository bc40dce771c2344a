#include "daln/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "daln/autodiff.hpp"
#include "daln/errors.hpp"
#include "daln/linalg.hpp"
#include "daln/losses.hpp"
#include "daln/rng.hpp"

namespace daln {

void validate_config(const TrainConfig& config) {
  if (config.epochs < 1) throw ValueError("config: epochs must be positive");
  if (config.steps_per_epoch < 0)
    throw ValueError("config: steps_per_epoch must be nonnegative");
  if (config.batch_size < 2)
    throw ValueError("config: batch_size must be at least 2");
  if (config.momentum < 0.0 || config.weight_decay < 0.0 ||
      config.lr_classifier < 0.0 || config.lr_extractor < 0.0 ||
      config.lr_alpha < 0.0 || config.lr_beta < 0.0 || config.grl_gamma < 0.0)
    throw ValueError("config: rates and decays must be nonnegative");
  if (config.lambda < 0.0) throw ValueError("config: lambda must be >= 0");
  if (config.gamma < 0.0) throw ValueError("config: gamma must be >= 0");
  if (config.hidden_dims.empty())
    throw ValueError("config: hidden_dims must not be empty");
  for (int h : config.hidden_dims)
    if (h <= 0) throw ValueError("config: hidden dims must be positive");
}

void sgd_step(Matrix& param, const Matrix& grad, double lr, double momentum,
              double weight_decay, Matrix& velocity) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols() ||
      velocity.rows() != param.rows() || velocity.cols() != param.cols())
    throw ShapeError("sgd_step: mismatched shapes " + param.shape_str() +
                     ", " + grad.shape_str() + ", " + velocity.shape_str());
  for (int i = 0; i < param.size(); ++i) {
    velocity.data()[i] = momentum * velocity.data()[i] + grad.data()[i] +
                         weight_decay * param.data()[i];
    param.data()[i] -= lr * velocity.data()[i];
  }
}

double lr_schedule(double lr0, double progress, double alpha, double beta) {
  return lr0 / std::pow(1.0 + alpha * progress, beta);
}

double grl_schedule(double progress, double grl_gamma) {
  return 2.0 / (1.0 + std::exp(-grl_gamma * progress)) - 1.0;
}

namespace {

double mean_cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
  double loss = 0.0;
  for (size_t i = 0; i < labels.size(); ++i)
    loss -= std::log(probs(static_cast<int>(i), labels[i]) + 1e-12);
  return loss / labels.size();
}

double nwd_value(const Model& m, const Matrix& x_s, const Matrix& x_t) {
  const Matrix p_s = classify_values(m, x_s);
  const Matrix p_t = classify_values(m, x_t);
  return nuclear_norm_value(p_s) / p_s.rows() -
         nuclear_norm_value(p_t) / p_t.rows();
}

struct BatchDrawer {
  const Dataset* ds;
  std::vector<int> order;
  RngStream rng;

  BatchDrawer(const Dataset& d, uint64_t seed, const char* purpose)
      : ds(&d), rng(RngStream::for_purpose(seed, purpose)) {}

  void reshuffle() { order = rng.permutation(ds->features.rows()); }

  // consecutive rows of this epoch's permutation, wrapping cyclically
  void fill(int start, Matrix* x, std::vector<int>* y) const {
    const int n = static_cast<int>(order.size());
    for (int i = 0; i < x->rows(); ++i) {
      const int at = order[(start + i) % n];
      for (int j = 0; j < x->cols(); ++j) (*x)(i, j) = ds->features(at, j);
      if (y != nullptr) (*y)[i] = ds->labels[at];
    }
  }
};

void check_finite(double value, const char* what, int step) {
  if (!std::isfinite(value))
    throw NumericError("step " + std::to_string(step) + ": non-finite " +
                       what);
}

}  // namespace

MetricsReport evaluate(const Model& m, const Dataset& ds) {
  if (ds.labels.empty()) throw ValueError("evaluate: dataset has no labels");
  const Matrix preds = classify_values(m, ds.features);
  const ClassificationEval eval = confusion_and_accuracy(preds, ds.labels);
  MetricsReport r;
  r.accuracy = eval.accuracy;
  r.per_class_recall = eval.per_class_recall;
  r.confusion = eval.confusion;
  r.determinacy_ratio = determinacy_ratio(preds, ds.labels);
  r.per_class_correct = per_class_correct(preds, ds.labels);
  const SelfCorrelation sc = self_correlation(preds);
  if (ds.domain_tag == DomainTag::kTarget) {
    r.i_a_tgt = sc.i_a;
    r.i_e_tgt = sc.i_e;
  } else {
    r.i_a_src = sc.i_a;
    r.i_e_src = sc.i_e;
  }
  return r;
}

TrainResult train(const TrainConfig& config, const Dataset& source,
                  const Dataset& target) {
  validate_config(config);
  if (source.labels.empty()) throw ValueError("train: source must be labeled");
  if (source.features.cols() != target.features.cols())
    throw ShapeError("train: domain widths differ, " +
                     source.features.shape_str() + " vs " +
                     target.features.shape_str());
  if (source.class_count < 2)
    throw ValueError("train: need at least two classes");
  if (target.class_count != 0 && target.class_count != source.class_count)
    throw ValueError("train: class counts disagree");

  const int d_in = source.features.cols();
  const int k = source.class_count;
  std::vector<int> dims{d_in};
  dims.insert(dims.end(), config.hidden_dims.begin(),
              config.hidden_dims.end());

  TrainResult result;
  {
    auto init = RngStream::for_purpose(config.seed, "init");
    result.model.extractor = make_extractor(dims, config.activation, init);
    result.model.classifier = make_classifier(k, dims.back(), init);
  }
  const bool with_disc =
      config.mode == TrainMode::kDann || config.mode == TrainMode::kDannNwd;
  DomainDiscriminator disc;
  if (with_disc) {
    auto init = RngStream::for_purpose(config.seed, "init/disc");
    disc.net =
        make_extractor({dims.back(), 16, 1}, config.activation, init);
  }

  ad::Tape tape;
  BoundModel bm = bind(tape, result.model, true);
  BoundExtractor bd;
  if (with_disc) bd = bind(tape, disc.net, true);

  // update order is fixed: extractor first, then classifier, then the
  // discriminator; the first group anneals from lr_extractor, the rest from
  // lr_classifier
  std::vector<ad::Node*> slow_group, fast_group;
  for (auto* w : bm.extractor.weights) slow_group.push_back(w);
  for (auto* b : bm.extractor.biases) slow_group.push_back(b);
  fast_group.push_back(bm.classifier.weight);
  fast_group.push_back(bm.classifier.bias);
  for (auto* w : bd.weights) fast_group.push_back(w);
  for (auto* b : bd.biases) fast_group.push_back(b);
  std::vector<Matrix> slow_vel, fast_vel;
  for (auto* p : slow_group)
    slow_vel.emplace_back(p->value.rows(), p->value.cols());
  for (auto* p : fast_group)
    fast_vel.emplace_back(p->value.rows(), p->value.cols());

  // Auto step count: at least one pass over the source, but no less than 200
  // steps per epoch -- at the default learning rates the documented budgets
  // (e.g. 100 supervised epochs reaching 0.99 source accuracy on the moons)
  // need on the order of 2e4 total steps regardless of dataset size.
  const int n_s = source.features.rows();
  const int one_pass = (n_s + config.batch_size - 1) / config.batch_size;
  const int steps_per_epoch = config.steps_per_epoch > 0
                                  ? config.steps_per_epoch
                                  : std::max(one_pass, 200);
  const int total_steps = config.epochs * steps_per_epoch;

  BatchDrawer source_draw(source, config.seed, "shuffle/source");
  BatchDrawer target_draw(target, config.seed, "shuffle/target");

  Matrix x_s(config.batch_size, d_in);
  Matrix x_t(config.batch_size, d_in);
  std::vector<int> y_s(config.batch_size, 0);

  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    source_draw.reshuffle();
    target_draw.reshuffle();
    for (int k_step = 0; k_step < steps_per_epoch; ++k_step, ++step) {
      const double p = static_cast<double>(step) / total_steps;
      const double lr_fast =
          lr_schedule(config.lr_classifier, p, config.lr_alpha, config.lr_beta);
      const double lr_slow =
          lr_schedule(config.lr_extractor, p, config.lr_alpha, config.lr_beta);
      const double grl = grl_schedule(p, config.grl_gamma);

      source_draw.fill(k_step * config.batch_size, &x_s, &y_s);
      target_draw.fill(k_step * config.batch_size, &x_t, nullptr);
      DomainBatch batch{x_s, y_s, x_t};

      tape.clear();
      LossBundle bundle;
      try {
        switch (config.mode) {
          case TrainMode::kDaln:
            bundle = daln_total(tape, bm, batch, config.lambda, grl);
            break;
          case TrainMode::kSourceOnly:
            bundle = daln_total(tape, bm, batch, 0.0, grl);
            break;
          case TrainMode::kDann:
            bundle = dann_losses(tape, bm, bd, batch, grl);
            write_back(bm, &result.model);
            bundle.nwd = nwd_value(result.model, x_s, x_t);
            break;
          case TrainMode::kDannNwd:
            bundle = dann_losses(tape, bm, bd, batch, grl);
            bundle = regularized_total(
                tape, std::move(bundle),
                nwd_loss(tape, bm, x_s, x_t, grl), config.gamma);
            break;
        }
      } catch (const ValueError& e) {
        // a diverging run overflows inside the forward pass one step after the
        // parameters themselves were still finite; report it as the numeric
        // abort it is, with the step that blew up
        if (std::string_view(e.what()).find("non-finite") !=
            std::string_view::npos)
          throw NumericError("step " + std::to_string(step) + ": " + e.what());
        throw;
      }
      check_finite(bundle.total->value(0, 0), "loss", step);
      check_finite(bundle.cls, "classification loss", step);
      check_finite(bundle.nwd, "discrepancy", step);
      tape.backward(bundle.total);

      for (size_t i = 0; i < slow_group.size(); ++i)
        sgd_step(slow_group[i]->value, slow_group[i]->grad, lr_slow,
                 config.momentum, config.weight_decay, slow_vel[i]);
      for (size_t i = 0; i < fast_group.size(); ++i)
        sgd_step(fast_group[i]->value, fast_group[i]->grad, lr_fast,
                 config.momentum, config.weight_decay, fast_vel[i]);
      for (auto* group : {&slow_group, &fast_group})
        for (auto* param : *group)
          if (!param->value.all_finite())
            throw NumericError("step " + std::to_string(step) +
                               ": non-finite parameter");

      result.log.steps.push_back(
          {step, lr_fast, grl, bundle.cls, bundle.nwd});
    }

    write_back(bm, &result.model);
    MetricsReport report;
    if (!target.labels.empty()) report = evaluate(result.model, target);
    report.epoch = epoch;
    const SelfCorrelation tc =
        self_correlation(classify_values(result.model, target.features));
    report.i_a_tgt = tc.i_a;
    report.i_e_tgt = tc.i_e;
    const Matrix src_preds = classify_values(result.model, source.features);
    const SelfCorrelation sc = self_correlation(src_preds);
    report.i_a_src = sc.i_a;
    report.i_e_src = sc.i_e;
    const Matrix f_s = extract_values(result.model.extractor, source.features);
    const Matrix f_t = extract_values(result.model.extractor, target.features);
    report.mmd = mmd_rbf(f_s, f_t);
    report.a_distance = proxy_a_distance(f_s, f_t);
    report.l_cls = mean_cross_entropy(src_preds, source.labels);
    report.l_nwd = nwd_value(result.model, source.features, target.features);
    result.log.epochs.push_back(std::move(report));
  }
  return result;
}

}  // namespace daln
