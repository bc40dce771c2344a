#include "daln/losses.hpp"

#include "daln/errors.hpp"

namespace daln {

namespace {

void require_nonempty(const Matrix& x_s, const Matrix& x_t) {
  if (x_s.rows() == 0 || x_t.rows() == 0) {
    throw ValueError("critic loss: source and target batches must be nonempty");
  }
}

/// Critic discrepancy over already-extracted features, reversal layer on both
/// branches before the classifier.
ad::Node* critic_discrepancy(ad::Tape& tape, const BoundModel& m,
                             ad::Node* f_s, ad::Node* f_t, double grl_coeff,
                             CriticNorm norm) {
  ad::Node* score_s = critic_score(
      tape, m.classifier, tape.grad_reverse(f_s, grl_coeff), norm);
  ad::Node* score_t = critic_score(
      tape, m.classifier, tape.grad_reverse(f_t, grl_coeff), norm);
  return tape.sub(score_s, score_t);
}

ad::Node* critic_loss(ad::Tape& tape, const BoundModel& m, const Matrix& x_s,
                      const Matrix& x_t, double grl_coeff, CriticNorm norm) {
  require_nonempty(x_s, x_t);
  ad::Node* f_s = extract(tape, m.extractor, tape.input(x_s));
  ad::Node* f_t = extract(tape, m.extractor, tape.input(x_t));
  return critic_discrepancy(tape, m, f_s, f_t, grl_coeff, norm);
}

}  // namespace

ad::Node* classification_loss(ad::Tape& tape, const BoundModel& m,
                              const Matrix& x_s, const std::vector<int>& y_s) {
  if (x_s.rows() == 0) {
    throw ValueError("classification_loss: empty source batch");
  }
  ad::Node* probs =
      classify(tape, m.classifier, extract(tape, m.extractor, tape.input(x_s)));
  return tape.cross_entropy_rows(probs, y_s);
}

ad::Node* nwd_loss(ad::Tape& tape, const BoundModel& m, const Matrix& x_s,
                   const Matrix& x_t, double grl_coeff) {
  return critic_loss(tape, m, x_s, x_t, grl_coeff, CriticNorm::kNuclear);
}

ad::Node* frobenius_critic_loss(ad::Tape& tape, const BoundModel& m,
                                const Matrix& x_s, const Matrix& x_t,
                                double grl_coeff) {
  return critic_loss(tape, m, x_s, x_t, grl_coeff, CriticNorm::kFrobenius);
}

LossBundle daln_total(ad::Tape& tape, const BoundModel& m,
                      const DomainBatch& batch, double lambda,
                      double grl_coeff) {
  if (lambda < 0.0) throw ValueError("daln_total: lambda must be >= 0");
  require_nonempty(batch.x_source, batch.x_target);

  // the source features feed both the supervised loss and the critic branch
  ad::Node* f_s = extract(tape, m.extractor, tape.input(batch.x_source));
  ad::Node* probs = classify(tape, m.classifier, f_s);
  ad::Node* cls = tape.cross_entropy_rows(probs, batch.y_source);

  ad::Node* f_t = extract(tape, m.extractor, tape.input(batch.x_target));
  ad::Node* nwd = critic_discrepancy(tape, m, f_s, f_t, grl_coeff,
                                     CriticNorm::kNuclear);

  LossBundle bundle;
  bundle.total = tape.sub(cls, tape.scale(nwd, lambda));
  bundle.cls = cls->value(0, 0);
  bundle.nwd = nwd->value(0, 0);
  return bundle;
}

LossBundle dann_losses(ad::Tape& tape, const BoundModel& m,
                       const BoundExtractor& disc, const DomainBatch& batch,
                       double grl_coeff) {
  require_nonempty(batch.x_source, batch.x_target);

  ad::Node* f_s = extract(tape, m.extractor, tape.input(batch.x_source));
  ad::Node* probs = classify(tape, m.classifier, f_s);
  ad::Node* cls = tape.cross_entropy_rows(probs, batch.y_source);

  ad::Node* f_t = extract(tape, m.extractor, tape.input(batch.x_target));
  ad::Node* d_s = discriminate(tape, disc, tape.grad_reverse(f_s, grl_coeff));
  ad::Node* d_t = discriminate(tape, disc, tape.grad_reverse(f_t, grl_coeff));

  const int b_s = batch.x_source.rows();
  const int b_t = batch.x_target.rows();
  ad::Node* bce_s = tape.binary_cross_entropy(d_s, Matrix::filled(b_s, 1, 1.0));
  ad::Node* bce_t = tape.binary_cross_entropy(d_t, Matrix(b_t, 1));
  // per-batch means recombined into one mean over all b_s + b_t rows
  const double n = b_s + b_t;
  ad::Node* l_spe = tape.add(tape.scale(bce_s, b_s / n),
                             tape.scale(bce_t, b_t / n));

  LossBundle bundle;
  bundle.total = tape.add(cls, l_spe);
  bundle.cls = cls->value(0, 0);
  bundle.extras["l_spe"] = l_spe->value(0, 0);
  return bundle;
}

LossBundle regularized_total(ad::Tape& tape, LossBundle base, ad::Node* nwd,
                             double gamma) {
  if (gamma < 0.0) throw ValueError("regularized_total: gamma must be >= 0");
  base.total = tape.sub(base.total, tape.scale(nwd, gamma));
  base.nwd = nwd->value(0, 0);
  return base;
}

}  // namespace daln
