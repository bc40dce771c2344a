#include "daln/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "daln/autodiff.hpp"
#include "daln/check.hpp"
#include "daln/kernels.hpp"
#include "daln/linalg.hpp"
#include "daln/losses.hpp"
#include "daln/model.hpp"
#include "daln/rng.hpp"

namespace daln {

namespace {

Matrix random_matrix(int rows, int cols, uint64_t seed, double scale = 1.0) {
  auto rng = RngStream::for_purpose(seed, "gradcheck");
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

/// A 6x4 matrix with prescribed well-separated singular values, built by
/// rescaling the singular directions of a random draw.
Matrix gapped_matrix(uint64_t seed) {
  auto rng = RngStream::for_purpose(seed, "gradcheck/gaps");
  std::vector<double> s_want(4);
  for (int j = 0; j < 4; ++j) s_want[j] = 4.0 - j + 0.3 * rng.uniform();
  const auto base = svd(random_matrix(6, 4, seed + 101));
  Matrix us = base.u;
  for (int i = 0; i < us.rows(); ++i)
    for (int j = 0; j < us.cols(); ++j) us(i, j) *= s_want[j];
  return kernels::matmul(us, transpose(base.v));
}

std::string worst_text(double worst) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "worst rel err %.3e", worst);
  return buf;
}

CheckOutcome matmul_grad_fd() {
  double worst = 0.0;
  for (uint64_t rep = 0; rep < 5; ++rep) {
    const Matrix a0 = random_matrix(3, 4, 10 + rep);
    const Matrix b0 = random_matrix(4, 2, 20 + rep);
    ad::Tape t;
    ad::Node* a = t.param(a0);
    ad::Node* b = t.param(b0);
    t.backward(t.sum(t.matmul(a, b)));
    auto through_a = [&](const Matrix& av) {
      ad::Tape s;
      return s.sum(s.matmul(s.input(av), s.input(b0)))->value(0, 0);
    };
    auto through_b = [&](const Matrix& bv) {
      ad::Tape s;
      return s.sum(s.matmul(s.input(a0), s.input(bv)))->value(0, 0);
    };
    worst = std::max(worst, max_rel_err(a->grad, fd_gradient(through_a, a0)));
    worst = std::max(worst, max_rel_err(b->grad, fd_gradient(through_b, b0)));
  }
  return {"matmul-grad-fd", worst <= 1e-6, worst_text(worst)};
}

CheckOutcome activation_grad_fd() {
  double worst = 0.0;
  for (uint64_t rep = 0; rep < 5; ++rep) {
    Matrix x0 = random_matrix(4, 4, 30 + rep);
    {
      ad::Tape t;
      ad::Node* x = t.param(x0);
      t.backward(t.sum(t.tanh(x)));
      auto f = [](const Matrix& xv) {
        ad::Tape s;
        return s.sum(s.tanh(s.input(xv)))->value(0, 0);
      };
      worst = std::max(worst, max_rel_err(x->grad, fd_gradient(f, x0)));
    }
    for (int i = 0; i < x0.rows(); ++i)
      for (int j = 0; j < x0.cols(); ++j)
        if (std::abs(x0(i, j)) < 0.1) x0(i, j) = 0.5;  // keep relu off its kink
    {
      ad::Tape t;
      ad::Node* x = t.param(x0);
      t.backward(t.sum(t.relu(x)));
      auto f = [](const Matrix& xv) {
        ad::Tape s;
        return s.sum(s.relu(s.input(xv)))->value(0, 0);
      };
      worst = std::max(worst, max_rel_err(x->grad, fd_gradient(f, x0)));
    }
  }
  return {"activation-grad-fd", worst <= 1e-6, worst_text(worst)};
}

CheckOutcome softmax_ce_grad_fd() {
  double worst = 0.0;
  for (uint64_t rep = 0; rep < 5; ++rep) {
    const Matrix logits0 = random_matrix(5, 4, 40 + rep, 2.0);
    auto rng = RngStream::for_purpose(50 + rep, "gradcheck/labels");
    std::vector<int> labels(5);
    for (int& y : labels) y = static_cast<int>(rng.next_u64() % 4);
    ad::Tape t;
    ad::Node* logits = t.param(logits0);
    t.backward(t.cross_entropy_rows(t.softmax_rows(logits), labels));
    auto f = [&](const Matrix& lv) {
      ad::Tape s;
      return s.cross_entropy_rows(s.softmax_rows(s.input(lv)), labels)
          ->value(0, 0);
    };
    worst = std::max(worst, max_rel_err(logits->grad, fd_gradient(f, logits0)));
  }
  return {"softmax-ce-grad-fd", worst <= 1e-5, worst_text(worst)};
}

CheckOutcome nuclear_value_gram() {
  double worst = 0.0;
  for (uint64_t rep = 0; rep < 50; ++rep) {
    const Matrix z = gapped_matrix(60 + rep);
    Matrix gram(z.cols(), z.cols());
    kernels::matmul_acc_tn(gram, z, z);
    const std::vector<double> eig = jacobi_eigen_sym(gram);
    double gram_value = 0.0;
    for (double e : eig) gram_value += std::sqrt(std::max(e, 0.0));
    worst = std::max(worst, std::abs(nuclear_norm_value(z) - gram_value));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "worst abs err %.3e", worst);
  return {"nuclear-value-gram", worst <= 1e-8, buf};
}

CheckOutcome nuclear_grad_fd() {
  double worst = 0.0;
  for (uint64_t rep = 0; rep < 20; ++rep) {
    const Matrix z0 = gapped_matrix(120 + rep);
    ad::Tape t;
    ad::Node* z = t.param(z0);
    t.backward(t.nuclear_norm(z));
    auto f = [](const Matrix& zv) {
      ad::Tape s;
      return s.nuclear_norm(s.input(zv))->value(0, 0);
    };
    worst = std::max(worst, max_rel_err(z->grad, fd_gradient(f, z0)));
  }
  return {"nuclear-grad-fd", worst <= 1e-5, worst_text(worst)};
}

CheckOutcome svd_reconstruction() {
  double worst = 0.0;
  for (uint64_t rep = 0; rep < 50; ++rep) {
    const int rows = 3 + static_cast<int>(rep % 5);
    const int cols = 2 + static_cast<int>(rep % 4);
    const Matrix z = random_matrix(rows, cols, 200 + rep);
    const SvdResult f = svd(z);
    Matrix us = f.u;
    for (int i = 0; i < us.rows(); ++i)
      for (int j = 0; j < us.cols(); ++j) us(i, j) *= f.s[j];
    const Matrix recon = kernels::matmul(us, transpose(f.v));
    for (int i = 0; i < z.rows(); ++i)
      for (int j = 0; j < z.cols(); ++j)
        worst = std::max(worst, std::abs(recon(i, j) - z(i, j)));
    Matrix utu(f.u.cols(), f.u.cols());
    Matrix vtv(f.v.cols(), f.v.cols());
    kernels::matmul_acc_tn(utu, f.u, f.u);
    kernels::matmul_acc_tn(vtv, f.v, f.v);
    for (int i = 0; i < utu.rows(); ++i)
      for (int j = 0; j < utu.cols(); ++j) {
        const double want = i == j ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(utu(i, j) - want));
        worst = std::max(worst, std::abs(vtv(i, j) - want));
      }
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "worst residual %.3e", worst);
  return {"svd-reconstruction", worst <= 1e-9, buf};
}

/// Per-sample critic score ||softmax(f W^T + bias)||_* for a single feature
/// row; the weight's Frobenius norm bounds its variation.
CheckOutcome critic_lipschitz() {
  int violations = 0;
  for (uint64_t rep = 0; rep < 1000; ++rep) {
    const Matrix w = random_matrix(2, 8, 1000 + rep, 2.0);
    const Matrix bias = random_matrix(1, 2, 2000 + rep);
    const Matrix f1 = random_matrix(1, 8, 3000 + rep, 3.0);
    const Matrix f2 = random_matrix(1, 8, 4000 + rep, 3.0);
    auto score = [&](const Matrix& f) {
      ad::Tape t;
      ad::Node* logits =
          t.add_row_bias(t.matmul(t.input(f), t.transpose(t.input(w))),
                         t.input(bias));
      return nuclear_norm_value(t.softmax_rows(logits)->value);
    };
    double dist = 0.0;
    for (int j = 0; j < 8; ++j) {
      const double d = f1(0, j) - f2(0, j);
      dist += d * d;
    }
    dist = std::sqrt(dist);
    if (std::abs(score(f1) - score(f2)) > frobenius(w) * dist + 1e-12)
      ++violations;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%d of 1000 violations", violations);
  return {"critic-lipschitz", violations == 0, buf};
}

CheckOutcome softmax_jacobian_bound() {
  int violations = 0;
  double worst_dev = 0.0;
  for (uint64_t rep = 0; rep < 1000; ++rep) {
    const Matrix logits = random_matrix(1, 6, 5000 + rep, 3.0);
    ad::Tape t;
    ad::Node* p = t.softmax_rows(t.input(logits));
    const Matrix jac = ad::softmax_jacobian(p->value.row(0));
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        if (std::abs(jac(i, j)) > 1.0) ++violations;
    if (rep < 3) {
      // cross-check the closed form against the tape's backward rule
      for (int i = 0; i < 6; ++i) {
        ad::Tape s;
        ad::Node* logit_node = s.param(logits);
        ad::Node* probs = s.softmax_rows(logit_node);
        Matrix pick(1, 6);
        pick(0, i) = 1.0;
        s.backward(s.sum(s.matmul(probs, s.transpose(s.input(pick)))));
        for (int j = 0; j < 6; ++j)
          worst_dev = std::max(
              worst_dev, std::abs(logit_node->grad(0, j) - jac(i, j)));
      }
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d of 1000 violations, tape dev %.3e",
                violations, worst_dev);
  return {"softmax-jacobian-bound", violations == 0 && worst_dev <= 1e-10,
          buf};
}

/// Gradient of the combined objective for the classifier with the extractor
/// frozen, against finite differences of the explicitly signed objective.
CheckOutcome objective_grad_fd() {
  double worst = 0.0;
  const double lambda = 0.7;
  const double grl_coeff = 0.8;
  for (uint64_t rep = 0; rep < 5; ++rep) {
    auto init = RngStream::for_purpose(300 + rep, "gradcheck/model");
    Model m;
    m.extractor = make_extractor({3, 6, 4}, Activation::kTanh, init);
    m.classifier = make_classifier(3, 4, init);
    const Matrix x_s = random_matrix(6, 3, 400 + rep);
    const Matrix x_t = random_matrix(6, 3, 500 + rep);
    auto label_rng = RngStream::for_purpose(600 + rep, "gradcheck/labels");
    std::vector<int> y_s(6);
    for (int& y : y_s) y = static_cast<int>(label_rng.next_u64() % 3);

    ad::Tape t;
    BoundModel bm{bind(t, m.extractor, false), bind(t, m.classifier, true)};
    DomainBatch batch{x_s, y_s, x_t};
    t.backward(daln_total(t, bm, batch, lambda, grl_coeff).total);

    auto objective = [&](const Matrix& wv) {
      Model probe = m;
      probe.classifier.weight = wv;
      const Matrix p_s = classify_values(probe, x_s);
      const Matrix p_t = classify_values(probe, x_t);
      double cls = 0.0;
      for (size_t i = 0; i < y_s.size(); ++i)
        cls -= std::log(p_s(static_cast<int>(i), y_s[i]) + 1e-12);
      cls /= static_cast<double>(y_s.size());
      const double nwd = nuclear_norm_value(p_s) / p_s.rows() -
                         nuclear_norm_value(p_t) / p_t.rows();
      return cls - lambda * nwd;
    };
    worst = std::max(
        worst, max_rel_err(bm.classifier.weight->grad,
                           fd_gradient(objective, m.classifier.weight)));
  }
  return {"objective-grad-fd", worst <= 1e-4, worst_text(worst)};
}

}  // namespace

std::vector<CheckOutcome> run_gradchecks() {
  return {matmul_grad_fd(),        activation_grad_fd(),
          softmax_ce_grad_fd(),    nuclear_value_gram(),
          nuclear_grad_fd(),       svd_reconstruction(),
          critic_lipschitz(),      softmax_jacobian_bound(),
          objective_grad_fd()};
}

}  // namespace daln
