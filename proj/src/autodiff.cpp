#include "daln/autodiff.hpp"

#include <cmath>
#include <string>

#include "daln/errors.hpp"
#include "daln/kernels.hpp"
#include "daln/linalg.hpp"

namespace daln::ad {

namespace {
double g_nuclear_grad_perturbation = 0.0;
constexpr double kLogEps = 1e-12;
}  // namespace

void set_nuclear_grad_perturbation(double offset) {
  g_nuclear_grad_perturbation = offset;
}
double nuclear_grad_perturbation() { return g_nuclear_grad_perturbation; }

Node* Tape::make(Matrix value, std::vector<Node*> parents) {
  auto node = std::make_unique<Node>();
  node->value = std::move(value);
  node->grad = Matrix(node->value.rows(), node->value.cols());
  node->parents = std::move(parents);
  for (Node* p : node->parents) node->requires_grad |= p->requires_grad;
  nodes_.push_back(std::move(node));
  return nodes_.back().get();
}

Node* Tape::param(Matrix value) {
  auto node = std::make_unique<Node>();
  node->value = std::move(value);
  node->grad = Matrix(node->value.rows(), node->value.cols());
  node->requires_grad = true;
  params_.push_back(std::move(node));
  return params_.back().get();
}

Node* Tape::input(Matrix value) { return make(std::move(value), {}); }

Node* Tape::matmul(Node* a, Node* b) {
  Node* out = make(kernels::matmul(a->value, b->value), {a, b});
  if (out->requires_grad) {
    out->backward_fn = [out, a, b] {
      if (a->requires_grad) kernels::matmul_acc_nt(a->grad, out->grad, b->value);
      if (b->requires_grad) kernels::matmul_acc_tn(b->grad, a->value, out->grad);
    };
  }
  return out;
}

Node* Tape::transpose(Node* x) {
  Node* out = make(daln::transpose(x->value), {x});
  if (out->requires_grad) {
    out->backward_fn = [out, x] {
      if (!x->requires_grad) return;
      for (int i = 0; i < out->grad.rows(); ++i)
        for (int j = 0; j < out->grad.cols(); ++j)
          x->grad(j, i) += out->grad(i, j);
    };
  }
  return out;
}

Node* Tape::add_row_bias(Node* x, Node* bias) {
  if (bias->value.rows() != 1 || bias->value.cols() != x->value.cols()) {
    throw ShapeError("add_row_bias: bias " + bias->value.shape_str() +
                     " does not broadcast over " + x->value.shape_str());
  }
  Matrix v = x->value;
  for (int i = 0; i < v.rows(); ++i)
    for (int j = 0; j < v.cols(); ++j) v(i, j) += bias->value(0, j);
  Node* out = make(std::move(v), {x, bias});
  if (out->requires_grad) {
    out->backward_fn = [out, x, bias] {
      const Matrix& g = out->grad;
      if (x->requires_grad) {
        for (int i = 0; i < g.size(); ++i) x->grad.data()[i] += g.data()[i];
      }
      if (bias->requires_grad) {
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) bias->grad(0, j) += g(i, j);
      }
    };
  }
  return out;
}

Node* Tape::softmax_rows(Node* logits) {
  Node* out = make(kernels::softmax_rows(logits->value), {logits});
  if (out->requires_grad) {
    out->backward_fn = [out, logits] {
      if (!logits->requires_grad) return;
      const Matrix& p = out->value;
      const Matrix& g = out->grad;
      for (int i = 0; i < p.rows(); ++i) {
        double dot = 0.0;
        for (int j = 0; j < p.cols(); ++j) dot += g(i, j) * p(i, j);
        for (int j = 0; j < p.cols(); ++j)
          logits->grad(i, j) += p(i, j) * (g(i, j) - dot);
      }
    };
  }
  return out;
}

Node* Tape::relu(Node* x) {
  Node* out = make(kernels::relu_eltwise(x->value), {x});
  if (out->requires_grad) {
    out->backward_fn = [out, x] {
      if (!x->requires_grad) return;
      for (int i = 0; i < x->value.size(); ++i) {
        if (x->value.data()[i] > 0.0) x->grad.data()[i] += out->grad.data()[i];
      }
    };
  }
  return out;
}

Node* Tape::tanh(Node* x) {
  Node* out = make(kernels::tanh_eltwise(x->value), {x});
  if (out->requires_grad) {
    out->backward_fn = [out, x] {
      if (!x->requires_grad) return;
      for (int i = 0; i < x->value.size(); ++i) {
        const double y = out->value.data()[i];
        x->grad.data()[i] += out->grad.data()[i] * (1.0 - y * y);
      }
    };
  }
  return out;
}

Node* Tape::sigmoid(Node* x) {
  Matrix v(x->value.rows(), x->value.cols());
  for (int i = 0; i < v.size(); ++i) {
    const double xi = x->value.data()[i];
    // branch keeps exp() argument nonpositive for stability at both tails
    v.data()[i] = xi >= 0.0 ? 1.0 / (1.0 + std::exp(-xi))
                            : std::exp(xi) / (1.0 + std::exp(xi));
  }
  Node* out = make(std::move(v), {x});
  if (out->requires_grad) {
    out->backward_fn = [out, x] {
      if (!x->requires_grad) return;
      for (int i = 0; i < x->value.size(); ++i) {
        const double y = out->value.data()[i];
        x->grad.data()[i] += out->grad.data()[i] * y * (1.0 - y);
      }
    };
  }
  return out;
}

Node* Tape::cross_entropy_rows(Node* probs, const std::vector<int>& labels) {
  const int b = probs->value.rows();
  const int k = probs->value.cols();
  if (static_cast<int>(labels.size()) != b) {
    throw ShapeError("cross_entropy_rows: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(b) + " rows");
  }
  for (int i = 0; i < b; ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw ValueError("cross_entropy_rows: label " +
                       std::to_string(labels[i]) + " at row " +
                       std::to_string(i) + " outside [0," + std::to_string(k) +
                       ")");
    }
  }
  double loss = 0.0;
  for (int i = 0; i < b; ++i)
    loss -= std::log(probs->value(i, labels[i]) + kLogEps);
  loss /= b;
  Node* out = make(Matrix(1, 1, {loss}), {probs});
  if (out->requires_grad) {
    out->backward_fn = [out, probs, labels, b] {
      if (!probs->requires_grad) return;
      const double g = out->grad(0, 0);
      for (int i = 0; i < b; ++i) {
        probs->grad(i, labels[i]) +=
            g * (-1.0 / b) / (probs->value(i, labels[i]) + kLogEps);
      }
    };
  }
  return out;
}

Node* Tape::binary_cross_entropy(Node* probs, const Matrix& targets) {
  const int b = probs->value.rows();
  if (probs->value.cols() != 1 || targets.rows() != b || targets.cols() != 1) {
    throw ShapeError("binary_cross_entropy: need b×1 probs and targets, got " +
                     probs->value.shape_str() + " and " + targets.shape_str());
  }
  double loss = 0.0;
  for (int i = 0; i < b; ++i) {
    const double p = probs->value(i, 0);
    const double t = targets(i, 0);
    loss -= t * std::log(p + kLogEps) + (1.0 - t) * std::log(1.0 - p + kLogEps);
  }
  loss /= b;
  Node* out = make(Matrix(1, 1, {loss}), {probs});
  if (out->requires_grad) {
    Matrix t = targets;
    out->backward_fn = [out, probs, t, b] {
      if (!probs->requires_grad) return;
      const double g = out->grad(0, 0);
      for (int i = 0; i < b; ++i) {
        const double p = probs->value(i, 0);
        probs->grad(i, 0) += g * (-1.0 / b) *
                             (t(i, 0) / (p + kLogEps) -
                              (1.0 - t(i, 0)) / (1.0 - p + kLogEps));
      }
    };
  }
  return out;
}

Node* Tape::frobenius_norm(Node* z) {
  double s2 = 0.0;
  for (int i = 0; i < z->value.size(); ++i)
    s2 += z->value.data()[i] * z->value.data()[i];
  const double norm = std::sqrt(s2);
  Node* out = make(Matrix(1, 1, {norm}), {z});
  if (out->requires_grad) {
    out->backward_fn = [out, z, norm] {
      if (!z->requires_grad || norm == 0.0) return;
      const double g = out->grad(0, 0);
      for (int i = 0; i < z->value.size(); ++i)
        z->grad.data()[i] += g * z->value.data()[i] / norm;
    };
  }
  return out;
}

Node* Tape::nuclear_norm(Node* z) {
  const SvdResult r = svd(z->value);
  double total = 0.0;
  for (double s : r.s) total += s;
  Node* out = make(Matrix(1, 1, {total}), {z});
  if (out->requires_grad) {
    Matrix subgrad = kernels::matmul(r.u, daln::transpose(r.v));
    if (g_nuclear_grad_perturbation != 0.0) {
      subgrad(0, 0) += g_nuclear_grad_perturbation;
    }
    out->backward_fn = [out, z, subgrad] {
      if (!z->requires_grad) return;
      const double g = out->grad(0, 0);
      for (int i = 0; i < z->value.size(); ++i)
        z->grad.data()[i] += g * subgrad.data()[i];
    };
  }
  return out;
}

Node* Tape::grad_reverse(Node* x, double coeff) {
  if (coeff < 0.0) throw ValueError("grad_reverse: coeff must be >= 0");
  Node* out = make(x->value, {x});
  if (out->requires_grad) {
    out->backward_fn = [out, x, coeff] {
      if (!x->requires_grad || coeff == 0.0) return;
      for (int i = 0; i < x->value.size(); ++i)
        x->grad.data()[i] += -coeff * out->grad.data()[i];
    };
  }
  return out;
}

Node* Tape::add(Node* a, Node* b) {
  Node* out = make(daln::add(a->value, b->value), {a, b});
  if (out->requires_grad) {
    out->backward_fn = [out, a, b] {
      for (Node* p : {a, b}) {
        if (!p->requires_grad) continue;
        for (int i = 0; i < p->grad.size(); ++i)
          p->grad.data()[i] += out->grad.data()[i];
      }
    };
  }
  return out;
}

Node* Tape::sub(Node* a, Node* b) {
  Node* out = make(daln::sub(a->value, b->value), {a, b});
  if (out->requires_grad) {
    out->backward_fn = [out, a, b] {
      if (a->requires_grad) {
        for (int i = 0; i < a->grad.size(); ++i)
          a->grad.data()[i] += out->grad.data()[i];
      }
      if (b->requires_grad) {
        for (int i = 0; i < b->grad.size(); ++i)
          b->grad.data()[i] -= out->grad.data()[i];
      }
    };
  }
  return out;
}

Node* Tape::scale(Node* a, double c) {
  Node* out = make(scaled(a->value, c), {a});
  if (out->requires_grad) {
    out->backward_fn = [out, a, c] {
      if (!a->requires_grad || c == 0.0) return;
      for (int i = 0; i < a->grad.size(); ++i)
        a->grad.data()[i] += c * out->grad.data()[i];
    };
  }
  return out;
}

Node* Tape::sum(Node* x) {
  Node* out = make(Matrix(1, 1, {x->value.sum()}), {x});
  if (out->requires_grad) {
    out->backward_fn = [out, x] {
      if (!x->requires_grad) return;
      const double g = out->grad(0, 0);
      for (int i = 0; i < x->grad.size(); ++i) x->grad.data()[i] += g;
    };
  }
  return out;
}

void Tape::backward(Node* root) {
  if (root->value.rows() != 1 || root->value.cols() != 1) {
    throw ValueError("backward: root must be 1x1, got " +
                     root->value.shape_str());
  }
  for (auto& n : params_) n->grad.fill(0.0);
  for (auto& n : nodes_) {
    n->grad.fill(0.0);
    n->seen = false;
  }
  root->grad(0, 0) = 1.0;
  root->seen = true;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node* n = it->get();
    if (!n->seen) continue;
    for (Node* p : n->parents) p->seen = true;
    if (n->backward_fn) n->backward_fn();
  }
}

void Tape::clear() {
  nodes_.clear();
  for (auto& n : params_) n->grad.fill(0.0);
}

Matrix softmax_jacobian(std::span<const double> probs) {
  const int k = static_cast<int>(probs.size());
  Matrix j(k, k);
  for (int i = 0; i < k; ++i)
    for (int l = 0; l < k; ++l)
      j(i, l) = probs[i] * ((i == l ? 1.0 : 0.0) - probs[l]);
  return j;
}

}  // namespace daln::ad
