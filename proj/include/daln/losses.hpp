#pragma once

#include <map>
#include <string>
#include <vector>

#include "daln/autodiff.hpp"
#include "daln/matrix.hpp"
#include "daln/model.hpp"

namespace daln {

/// One adversarial step's worth of data: a labeled source mini-batch plus an
/// unlabeled target mini-batch.
struct DomainBatch {
  Matrix x_source;
  std::vector<int> y_source;
  Matrix x_target;
};

/// A composed training objective: the scalar node to backpropagate plus the
/// raw values of its parts for logging.
struct LossBundle {
  ad::Node* total = nullptr;
  double cls = 0.0;
  double nwd = 0.0;
  std::map<std::string, double> extras;
};

/// Mean cross-entropy of the classifier on extracted source features.
ad::Node* classification_loss(ad::Tape& tape, const BoundModel& m,
                              const Matrix& x_s, const std::vector<int>& y_s);

/// Critic discrepancy: nuclear-norm critic score of the source batch minus
/// that of the target batch, with a gradient-reversal layer between the
/// extractor output and the classifier on both branches. Positive when the
/// source batch scores higher.
ad::Node* nwd_loss(ad::Tape& tape, const BoundModel& m, const Matrix& x_s,
                   const Matrix& x_t, double grl_coeff);

/// Same discrepancy with the Frobenius-norm critic (ablation variant).
ad::Node* frobenius_critic_loss(ad::Tape& tape, const BoundModel& m,
                                const Matrix& x_s, const Matrix& x_t,
                                double grl_coeff);

/// Combined adversarial objective: total = cls − λ·nwd, where the reversal
/// layer inside the nwd term makes one descent step move the classifier up
/// the discrepancy and the extractor down it.
LossBundle daln_total(ad::Tape& tape, const BoundModel& m,
                      const DomainBatch& batch, double lambda,
                      double grl_coeff);

/// Adversarial baseline with an explicit domain discriminator: total =
/// cls + pooled binary cross-entropy of the discriminator on
/// source-vs-target features, reversal layer between extractor and
/// discriminator. extras["l_spe"] records the domain loss.
LossBundle dann_losses(ad::Tape& tape, const BoundModel& m,
                       const BoundExtractor& disc, const DomainBatch& batch,
                       double grl_coeff);

/// Adds a discrepancy regularizer to an existing objective:
/// total = base.total − γ·nwd. The base's recorded values are preserved and
/// the nwd value is filled in.
LossBundle regularized_total(ad::Tape& tape, LossBundle base, ad::Node* nwd,
                             double gamma);

}  // namespace daln
