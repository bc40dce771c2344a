#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "daln/matrix.hpp"

namespace daln::ad {

/// One value in the computation graph. Nodes are owned by a Tape and
/// referenced by raw pointers that stay valid until the tape is cleared
/// (parameters survive clears). gradient always has the shape of value.
struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  bool seen = false;  // reachability flag used during backward
  std::vector<Node*> parents;
  std::function<void()> backward_fn;
};

/// Reverse-mode tape over dense matrices. Operations record themselves in
/// creation order; backward() replays them in exact reverse order, so
/// gradients are bit-identical across repeated runs on the same graph.
/// A tape is confined to one thread; independent tapes may run concurrently.
class Tape {
 public:
  /// Trainable leaf; persists across clear() so optimizers can hold on to it.
  Node* param(Matrix value);
  /// Constant leaf; no gradient is ever accumulated into it.
  Node* input(Matrix value);

  Node* matmul(Node* a, Node* b);
  Node* transpose(Node* x);
  /// x[b×d] plus a 1×d bias broadcast over rows.
  Node* add_row_bias(Node* x, Node* bias);
  /// Row-wise softmax with per-row max subtraction; rows of the output are
  /// nonnegative and sum to 1.
  Node* softmax_rows(Node* logits);
  Node* relu(Node* x);
  Node* tanh(Node* x);
  Node* sigmoid(Node* x);
  /// -(1/b)·Σ log(probs[i, labels[i]] + 1e-12); gradient flows only into the
  /// true-class entries.
  Node* cross_entropy_rows(Node* probs, const std::vector<int>& labels);
  /// -(1/b)·Σ t·log(p+ε) + (1-t)·log(1-p+ε) over a b×1 column of
  /// probabilities against 0/1 targets.
  Node* binary_cross_entropy(Node* probs, const Matrix& targets);
  /// sqrt(Σ z²); at z = 0 the value is 0 with zero gradient (a subgradient).
  Node* frobenius_norm(Node* z);
  /// Sum of singular values; backward is the subgradient u·vᵀ from the thin
  /// SVD actually computed (a member of the subdifferential everywhere).
  Node* nuclear_norm(Node* z);
  /// Identity forward; backward multiplies the incoming gradient by -coeff.
  /// coeff = 0 stops the gradient exactly (no accumulation at all).
  Node* grad_reverse(Node* x, double coeff);
  Node* add(Node* a, Node* b);
  Node* sub(Node* a, Node* b);
  /// c·a; c = 0 likewise detaches the parent from the backward pass.
  Node* scale(Node* a, double c);
  Node* sum(Node* x);

  /// Zeroes every gradient, seeds the 1×1 root with 1, and accumulates
  /// gradients through all nodes the root depends on, in reverse creation
  /// order. Throws ValueError if root is not scalar.
  void backward(Node* root);

  /// Drops all non-parameter nodes and zeroes every gradient.
  void clear();

  size_t node_count() const { return nodes_.size(); }
  size_t param_count() const { return params_.size(); }

 private:
  Node* make(Matrix value, std::vector<Node*> parents);

  std::vector<std::unique_ptr<Node>> params_;
  std::vector<std::unique_ptr<Node>> nodes_;
};

/// Dense softmax Jacobian J[i][j] = p_i·(δ_ij − p_j) for one probability row.
Matrix softmax_jacobian(std::span<const double> probs);

/// Fault-injection hook for the gradient checker: adds the given offset to
/// the first entry of the nuclear-norm backward rule. Only the checker's
/// self-test sets this; it must stay 0 everywhere else.
void set_nuclear_grad_perturbation(double offset);
double nuclear_grad_perturbation();

}  // namespace daln::ad
