#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gvrnn/nn/parameters.hpp"

namespace gvrnn::nn {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool valid() const { return tape != nullptr; }
};

/// Reverse-mode recorder for the small operator set the model needs. A tape
/// is built per forward pass and discarded; with `record == false` no
/// backward closures are kept (generation, evaluation).
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix value);
  /// Leaf bound to a parameter. Repeated calls with the same name return the
  /// same node, so gradients from every use accumulate in one place. The
  /// ParameterSet must outlive the tape.
  Var param(const ParameterSet& params, const std::string& name);

  const Matrix& value(int id) const {
    const auto& n = nodes_[static_cast<std::size_t>(id)];
    return n.ref ? *n.ref : n.value;
  }
  const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  template <class Expr>
  void accumulate(int id, const Eigen::MatrixBase<Expr>& g) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  using Backward = std::function<void(Tape&, int self)>;
  /// Records an op output. `backward` is dropped when no input needs a
  /// gradient or the tape is not recording.
  Var push(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var push(Matrix value, std::span<const Var> inputs, Backward backward);

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 value and runs all closures.
  void backward(Var loss);

  /// Gradients for every parameter in `params`; untouched ones are zero.
  Gradients gradients(const ParameterSet& params) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::map<std::string, int> param_ids_;
};

// Elementwise and structural ops. Shapes are checked; mismatches throw
// UsageError naming the op.
Var affine(Var x, Var w, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
Var relu(Var x);
Var sigmoid(Var x);
Var clamp(Var x, double lo, double hi);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var x, Eigen::Index begin, Eigen::Index count);
Var concat_rows(std::span<const Var> parts);
Var gather_rows(Var x, std::vector<int> rows);
Var head_rows(Var x, Eigen::Index count);
Var broadcast_rows(Var row, Eigen::Index count);
/// Sum of 1x1 values.
Var sum_scalars(std::span<const Var> parts);

/// One gated recurrent cell, PyTorch gate layout [reset | update | new]:
///   r = s(x Wr + h Ur), u = s(x Wu + h Uu), c = tanh(x Wn + bn + r * (h Un + cn))
///   h' = (1 - u) * c + u * h
Var gru_cell(Var x, Var h, Var w_ih, Var w_hh, Var b_ih, Var b_hh);

/// mean + exp(logvar / 2) * eps, with eps a constant of the same shape.
Var reparameterize(Var mean, Var logvar, const Matrix& eps);

/// sum(mask * bce(logits, targets)) / normalizer in the log-sum-exp form.
/// An empty mask means all ones.
Var bce_with_logits(Var logits, const Matrix& targets, const Matrix& mask, double normalizer);
/// sum(mask * (pred - target)^2) / normalizer.
Var squared_error(Var pred, const Matrix& targets, const Matrix& mask, double normalizer);
/// sum over rows and dims of KL(N(qm, e^qlv) || N(pm, e^plv)) / normalizer.
Var kl_diag(Var q_mean, Var q_logvar, Var p_mean, Var p_logvar, double normalizer);

}  // namespace gvrnn::nn
