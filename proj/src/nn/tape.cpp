#include "gvrnn/nn/tape.hpp"

#include <memory>
#include <string>

#include "gvrnn/error.hpp"

namespace gvrnn::nn {

namespace {

void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw UsageError(std::string(op) + ": " + what);
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void same_shape(const char* op, const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), op, "shape mismatch " + shape(a) + " vs " + shape(b));
}

Tape& tape_of(Var v) {
  if (!v.tape) throw UsageError("operation on an unbound Var");
  return *v.tape;
}

Matrix sigmoid_of(const Matrix& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

}  // namespace

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(const ParameterSet& params, const std::string& name) {
  if (auto it = param_ids_.find(name); it != param_ids_.end()) return {this, it->second};
  Node n;
  n.ref = &params.value(name);
  n.requires_grad = record_;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_ids_.emplace(name, id);
  return {this, id};
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::push(Matrix value, std::span<const Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const auto& v : inputs) {
      if (nodes_[static_cast<std::size_t>(v.id)].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var loss) {
  require(record_, "backward", "tape was built without recording");
  const auto& lv = value(loss.id);
  require(lv.rows() == 1 && lv.cols() == 1, "backward", "loss must be 1x1, got " + shape(lv));
  for (auto& n : nodes_) n.grad.resize(0, 0);
  accumulate(loss.id, Matrix::Ones(1, 1));
  for (int i = loss.id; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward && n.grad.size() != 0) n.backward(*this, i);
  }
}

Gradients Tape::gradients(const ParameterSet& params) const {
  Gradients out;
  for (const auto& [name, p] : params.entries()) {
    auto it = param_ids_.find(name);
    if (it != param_ids_.end() && grad(it->second).size() != 0) {
      out.emplace(name, grad(it->second));
    } else {
      out.emplace(name, Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  return out;
}

Var affine(Var x, Var w, Var b) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  const Matrix& bv = b.value();
  require(xv.cols() == wv.rows(), "affine", "input " + shape(xv) + " vs weight " + shape(wv));
  require(bv.rows() == 1 && bv.cols() == wv.cols(), "affine", "bias " + shape(bv) + " vs weight " + shape(wv));
  Matrix y = xv * wv;
  y.rowwise() += bv.row(0);
  return t.push(std::move(y), {x, w, b}, [x, w, b](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(x.id)) tp.accumulate(x.id, g * tp.value(w.id).transpose());
    if (tp.requires_grad(w.id)) tp.accumulate(w.id, tp.value(x.id).transpose() * g);
    if (tp.requires_grad(b.id)) tp.accumulate(b.id, g.colwise().sum());
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  same_shape("add", a.value(), b.value());
  return t.push(a.value() + b.value(), {a, b}, [a, b](Tape& tp, int self) {
    tp.accumulate(a.id, tp.grad(self));
    tp.accumulate(b.id, tp.grad(self));
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  same_shape("sub", a.value(), b.value());
  return t.push(a.value() - b.value(), {a, b}, [a, b](Tape& tp, int self) {
    tp.accumulate(a.id, tp.grad(self));
    tp.accumulate(b.id, -tp.grad(self));
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  return t.push(a.value() * s, {a}, [a, s](Tape& tp, int self) { tp.accumulate(a.id, tp.grad(self) * s); });
}

Var hadamard(Var a, Var b) {
  Tape& t = tape_of(a);
  same_shape("hadamard", a.value(), b.value());
  return t.push(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& tp, int self) {
    if (tp.requires_grad(a.id)) tp.accumulate(a.id, tp.grad(self).cwiseProduct(tp.value(b.id)));
    if (tp.requires_grad(b.id)) tp.accumulate(b.id, tp.grad(self).cwiseProduct(tp.value(a.id)));
  });
}

Var relu(Var x) {
  Tape& t = tape_of(x);
  return t.push(x.value().cwiseMax(0.0), {x}, [x](Tape& tp, int self) {
    tp.accumulate(x.id, (tp.value(x.id).array() > 0.0).select(tp.grad(self), 0.0));
  });
}

Var sigmoid(Var x) {
  Tape& t = tape_of(x);
  return t.push(sigmoid_of(x.value()), {x}, [x](Tape& tp, int self) {
    const auto y = tp.value(self).array();
    tp.accumulate(x.id, (tp.grad(self).array() * y * (1.0 - y)).matrix());
  });
}

Var clamp(Var x, double lo, double hi) {
  Tape& t = tape_of(x);
  return t.push(x.value().cwiseMax(lo).cwiseMin(hi), {x}, [x, lo, hi](Tape& tp, int self) {
    const auto& xv = tp.value(x.id).array();
    tp.accumulate(x.id, (xv >= lo && xv <= hi).select(tp.grad(self), 0.0));
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  Tape& t = tape_of(parts[0]);
  const auto rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols", "row count mismatch");
    cols += p.cols();
  }
  Matrix y(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    offsets.push_back(c);
    y.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.push(std::move(y), parts, [inputs, offsets](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (tp.requires_grad(inputs[i].id)) tp.accumulate(inputs[i].id, g.middleCols(offsets[i], tp.value(inputs[i].id).cols()));
    }
  });
}

Var slice_cols(Var x, Eigen::Index begin, Eigen::Index count) {
  Tape& t = tape_of(x);
  require(begin >= 0 && count >= 0 && begin + count <= x.cols(), "slice_cols", "range out of bounds");
  return t.push(x.value().middleCols(begin, count), {x}, [x, begin, count](Tape& tp, int self) {
    Matrix g = Matrix::Zero(tp.value(x.id).rows(), tp.value(x.id).cols());
    g.middleCols(begin, count) = tp.grad(self);
    tp.accumulate(x.id, g);
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  Tape& t = tape_of(parts[0]);
  const auto cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows", "column count mismatch");
    rows += p.rows();
  }
  Matrix y(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    offsets.push_back(r);
    y.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.push(std::move(y), parts, [inputs, offsets](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (tp.requires_grad(inputs[i].id)) tp.accumulate(inputs[i].id, g.middleRows(offsets[i], tp.value(inputs[i].id).rows()));
    }
  });
}

Var gather_rows(Var x, std::vector<int> rows) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  Matrix y(static_cast<Eigen::Index>(rows.size()), xv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < xv.rows(), "gather_rows", "row index out of range");
    y.row(static_cast<Eigen::Index>(i)) = xv.row(rows[i]);
  }
  auto idx = std::make_shared<const std::vector<int>>(std::move(rows));
  return t.push(std::move(y), {x}, [x, idx](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Matrix gx = Matrix::Zero(tp.value(x.id).rows(), tp.value(x.id).cols());
    for (std::size_t i = 0; i < idx->size(); ++i) gx.row((*idx)[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.accumulate(x.id, gx);
  });
}

Var head_rows(Var x, Eigen::Index count) {
  Tape& t = tape_of(x);
  require(count >= 0 && count <= x.rows(), "head_rows", "count out of range");
  if (count == x.rows()) return x;
  return t.push(x.value().topRows(count), {x}, [x, count](Tape& tp, int self) {
    Matrix g = Matrix::Zero(tp.value(x.id).rows(), tp.value(x.id).cols());
    g.topRows(count) = tp.grad(self);
    tp.accumulate(x.id, g);
  });
}

Var broadcast_rows(Var row, Eigen::Index count) {
  Tape& t = tape_of(row);
  require(row.rows() == 1, "broadcast_rows", "input must have one row");
  return t.push(row.value().replicate(count, 1), {row}, [row](Tape& tp, int self) {
    tp.accumulate(row.id, tp.grad(self).colwise().sum());
  });
}

Var sum_scalars(std::span<const Var> parts) {
  require(!parts.empty(), "sum_scalars", "no inputs");
  Tape& t = tape_of(parts[0]);
  double s = 0.0;
  for (const auto& p : parts) {
    require(p.rows() == 1 && p.cols() == 1, "sum_scalars", "inputs must be 1x1");
    s += p.value()(0, 0);
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.push(Matrix::Constant(1, 1, s), parts, [inputs](Tape& tp, int self) {
    for (const auto& v : inputs) tp.accumulate(v.id, tp.grad(self));
  });
}

namespace {

struct GruCache {
  Matrix r, u, c, gh_n;
};

}  // namespace

Var gru_cell(Var x, Var h, Var w_ih, Var w_hh, Var b_ih, Var b_hh) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  const Matrix& hv = h.value();
  const Matrix& wi = w_ih.value();
  const Matrix& wh = w_hh.value();
  const auto H = hv.cols();
  require(wh.rows() == H && wh.cols() == 3 * H, "gru_cell", "w_hh must be H x 3H, got " + shape(wh));
  require(wi.rows() == xv.cols() && wi.cols() == 3 * H, "gru_cell", "w_ih " + shape(wi) + " vs input " + shape(xv));
  require(xv.rows() == hv.rows(), "gru_cell", "batch mismatch between input and state");
  require(b_ih.rows() == 1 && b_ih.cols() == 3 * H && b_hh.rows() == 1 && b_hh.cols() == 3 * H, "gru_cell",
          "biases must be 1 x 3H");

  Matrix gi = xv * wi;
  gi.rowwise() += b_ih.value().row(0);
  Matrix gh = hv * wh;
  gh.rowwise() += b_hh.value().row(0);

  auto cache = std::make_shared<GruCache>();
  cache->r = sigmoid_of(gi.leftCols(H) + gh.leftCols(H));
  cache->u = sigmoid_of(gi.middleCols(H, H) + gh.middleCols(H, H));
  cache->gh_n = gh.rightCols(H);
  cache->c = (gi.rightCols(H).array() + cache->r.array() * cache->gh_n.array()).tanh().matrix();
  Matrix out = ((1.0 - cache->u.array()) * cache->c.array() + cache->u.array() * hv.array()).matrix();

  return t.push(std::move(out), {x, h, w_ih, w_hh, b_ih, b_hh},
                [x, h, w_ih, w_hh, b_ih, b_hh, cache, H](Tape& tp, int self) {
                  const auto G = tp.grad(self).array();
                  const auto& hv = tp.value(h.id);
                  const auto r = cache->r.array();
                  const auto u = cache->u.array();
                  const auto c = cache->c.array();
                  const Eigen::ArrayXXd dn = G * (1.0 - u) * (1.0 - c * c);
                  const Eigen::ArrayXXd du = G * (hv.array() - c) * u * (1.0 - u);
                  const Eigen::ArrayXXd dr = dn * cache->gh_n.array() * r * (1.0 - r);
                  Matrix dgi(dn.rows(), 3 * H);
                  dgi.leftCols(H) = dr.matrix();
                  dgi.middleCols(H, H) = du.matrix();
                  dgi.rightCols(H) = dn.matrix();
                  Matrix dgh = dgi;
                  dgh.rightCols(H) = (dn * r).matrix();

                  if (tp.requires_grad(x.id)) tp.accumulate(x.id, dgi * tp.value(w_ih.id).transpose());
                  if (tp.requires_grad(h.id)) {
                    Matrix dh = dgh * tp.value(w_hh.id).transpose();
                    dh.array() += G * u;
                    tp.accumulate(h.id, dh);
                  }
                  if (tp.requires_grad(w_ih.id)) tp.accumulate(w_ih.id, tp.value(x.id).transpose() * dgi);
                  if (tp.requires_grad(w_hh.id)) tp.accumulate(w_hh.id, hv.transpose() * dgh);
                  if (tp.requires_grad(b_ih.id)) tp.accumulate(b_ih.id, dgi.colwise().sum());
                  if (tp.requires_grad(b_hh.id)) tp.accumulate(b_hh.id, dgh.colwise().sum());
                });
}

Var reparameterize(Var mean, Var logvar, const Matrix& eps) {
  Tape& t = tape_of(mean);
  same_shape("reparameterize", mean.value(), logvar.value());
  same_shape("reparameterize", mean.value(), eps);
  auto e = std::make_shared<const Matrix>(eps);
  Matrix z = (mean.value().array() + (0.5 * logvar.value().array()).exp() * eps.array()).matrix();
  return t.push(std::move(z), {mean, logvar}, [mean, logvar, e](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    tp.accumulate(mean.id, g);
    if (tp.requires_grad(logvar.id)) {
      tp.accumulate(logvar.id, (g.array() * 0.5 * (0.5 * tp.value(logvar.id).array()).exp() * e->array()).matrix());
    }
  });
}

Var bce_with_logits(Var logits, const Matrix& targets, const Matrix& mask, double normalizer) {
  Tape& t = tape_of(logits);
  const Matrix& l = logits.value();
  same_shape("bce_with_logits", l, targets);
  if (mask.size() != 0) same_shape("bce_with_logits", l, mask);
  require(normalizer > 0.0, "bce_with_logits", "normalizer must be positive");
  Eigen::ArrayXXd per = l.array().max(0.0) - l.array() * targets.array() + (-l.array().abs()).exp().log1p();
  if (mask.size() != 0) per *= mask.array();
  const double value = per.sum() / normalizer;
  auto tg = std::make_shared<const Matrix>(targets);
  auto mk = std::make_shared<const Matrix>(mask);
  return t.push(Matrix::Constant(1, 1, value), {logits}, [logits, tg, mk, normalizer](Tape& tp, int self) {
    const double g = tp.grad(self)(0, 0) / normalizer;
    Eigen::ArrayXXd d = sigmoid_of(tp.value(logits.id)).array() - tg->array();
    if (mk->size() != 0) d *= mk->array();
    tp.accumulate(logits.id, (d * g).matrix());
  });
}

Var squared_error(Var pred, const Matrix& targets, const Matrix& mask, double normalizer) {
  Tape& t = tape_of(pred);
  same_shape("squared_error", pred.value(), targets);
  if (mask.size() != 0) same_shape("squared_error", pred.value(), mask);
  require(normalizer > 0.0, "squared_error", "normalizer must be positive");
  Eigen::ArrayXXd diff = pred.value().array() - targets.array();
  if (mask.size() != 0) diff *= mask.array();
  const double value = diff.square().sum() / normalizer;
  auto d = std::make_shared<const Eigen::ArrayXXd>(std::move(diff));
  return t.push(Matrix::Constant(1, 1, value), {pred}, [pred, d, normalizer](Tape& tp, int self) {
    tp.accumulate(pred.id, (*d * (2.0 * tp.grad(self)(0, 0) / normalizer)).matrix());
  });
}

Var kl_diag(Var q_mean, Var q_logvar, Var p_mean, Var p_logvar, double normalizer) {
  Tape& t = tape_of(q_mean);
  same_shape("kl_diag", q_mean.value(), q_logvar.value());
  same_shape("kl_diag", q_mean.value(), p_mean.value());
  same_shape("kl_diag", q_mean.value(), p_logvar.value());
  require(normalizer > 0.0, "kl_diag", "normalizer must be positive");
  const auto qm = q_mean.value().array();
  const auto ql = q_logvar.value().array();
  const auto pm = p_mean.value().array();
  const auto pl = p_logvar.value().array();
  const Eigen::ArrayXXd diff = qm - pm;
  // exp(ql - pl) rather than exp(ql) * exp(-pl): identical q and p give 0 exactly
  const Eigen::ArrayXXd ratio = (ql - pl).exp() + diff.square() * (-pl).exp();
  const double value = 0.5 * (pl - ql + ratio - 1.0).sum() / normalizer;
  return t.push(Matrix::Constant(1, 1, value), {q_mean, q_logvar, p_mean, p_logvar},
                [q_mean, q_logvar, p_mean, p_logvar, normalizer](Tape& tp, int self) {
                  const double g = tp.grad(self)(0, 0) / normalizer;
                  const auto qm = tp.value(q_mean.id).array();
                  const auto ql = tp.value(q_logvar.id).array();
                  const auto pm = tp.value(p_mean.id).array();
                  const auto pl = tp.value(p_logvar.id).array();
                  const Eigen::ArrayXXd inv_pvar = (-pl).exp();
                  const Eigen::ArrayXXd dmean = (qm - pm) * inv_pvar * g;
                  tp.accumulate(q_mean.id, dmean.matrix());
                  tp.accumulate(p_mean.id, (-dmean).matrix());
                  if (tp.requires_grad(q_logvar.id)) {
                    tp.accumulate(q_logvar.id, (0.5 * g * ((ql - pl).exp() - 1.0)).matrix());
                  }
                  if (tp.requires_grad(p_logvar.id)) {
                    const Eigen::ArrayXXd ratio = (ql - pl).exp() + (qm - pm).square() * inv_pvar;
                    tp.accumulate(p_logvar.id, (0.5 * g * (1.0 - ratio)).matrix());
                  }
                });
}

}  // namespace gvrnn::nn
