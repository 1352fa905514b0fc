#include "gvrnn/nn/layers.hpp"

#include <cmath>

#include "gvrnn/error.hpp"

namespace gvrnn::nn {

Matrix uniform_fan_in(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
  }
  return m;
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

void add_linear(ParameterSet& params, const std::string& prefix, int in, int out, Rng& rng) {
  params.add(prefix + ".weight", uniform_fan_in(in, out, in, rng));
  params.add(prefix + ".bias", uniform_fan_in(1, out, in, rng));
}

void add_mlp(ParameterSet& params, const std::string& prefix, const std::vector<int>& sizes, Rng& rng) {
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    add_linear(params, prefix + ".fc" + std::to_string(i), sizes[i], sizes[i + 1], rng);
  }
}

void add_gru_stack(ParameterSet& params, const std::string& prefix, int input, int hidden, int layers, Rng& rng) {
  for (int l = 0; l < layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    const int in = l == 0 ? input : hidden;
    params.add(p + ".w_ih", uniform_fan_in(in, 3 * hidden, hidden, rng));
    params.add(p + ".w_hh", uniform_fan_in(hidden, 3 * hidden, hidden, rng));
    params.add(p + ".b_ih", uniform_fan_in(1, 3 * hidden, hidden, rng));
    params.add(p + ".b_hh", uniform_fan_in(1, 3 * hidden, hidden, rng));
  }
}

Var linear(Tape& t, const ParameterSet& params, const std::string& prefix, Var x) {
  return affine(x, t.param(params, prefix + ".weight"), t.param(params, prefix + ".bias"));
}

Var mlp_forward(Tape& t, const ParameterSet& params, const std::string& prefix, int layers, Var x) {
  Var h = x;
  for (int i = 0; i < layers; ++i) {
    h = linear(t, params, prefix + ".fc" + std::to_string(i), h);
    if (i + 1 < layers) h = relu(h);
  }
  return h;
}

Var gru_stack_step(Tape& t, const ParameterSet& params, const std::string& prefix, Var x, std::vector<Var>& state) {
  Var in = x;
  for (std::size_t l = 0; l < state.size(); ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    state[l] = gru_cell(in, state[l], t.param(params, p + ".w_ih"), t.param(params, p + ".w_hh"),
                        t.param(params, p + ".b_ih"), t.param(params, p + ".b_hh"));
    in = state[l];
  }
  return in;
}

Vector mlp_forward(const ParameterSet& params, const std::string& prefix, int layers, const Vector& x) {
  Tape t(false);
  return mlp_forward(t, params, prefix, layers, t.constant(x.transpose())).value().row(0).transpose();
}

std::pair<Vector, std::vector<Vector>> gru_stack_step(const ParameterSet& params, const std::string& prefix,
                                                     const Vector& x, const std::vector<Vector>& state) {
  Tape t(false);
  std::vector<Var> s;
  for (const auto& h : state) s.push_back(t.constant(h.transpose()));
  Var out = gru_stack_step(t, params, prefix, t.constant(x.transpose()), s);
  std::vector<Vector> next;
  for (const auto& v : s) next.push_back(v.value().row(0).transpose());
  return {out.value().row(0).transpose(), std::move(next)};
}

Vector reparameterize(const GaussianParams& g, Rng& rng) {
  if (g.mean.size() != g.logvar.size()) throw UsageError("reparameterize: mean/logvar length mismatch");
  Vector z(g.mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = g.mean(i) + std::exp(0.5 * g.logvar(i)) * rng.normal();
  return z;
}

double kl_diag_gaussians(const GaussianParams& q, const GaussianParams& p) {
  if (q.mean.size() != p.mean.size() || q.logvar.size() != q.mean.size() || p.logvar.size() != p.mean.size()) {
    throw UsageError("kl_diag_gaussians: dimension mismatch");
  }
  double kl = 0.0;
  for (Eigen::Index i = 0; i < q.mean.size(); ++i) {
    const double d = q.mean(i) - p.mean(i);
    kl += 0.5 * (p.logvar(i) - q.logvar(i) + std::exp(q.logvar(i) - p.logvar(i)) + d * d * std::exp(-p.logvar(i)) - 1.0);
  }
  return kl;
}

ReconLosses recon_losses(const Matrix& edge_logits, const Matrix& edge_targets, const Matrix& edge_mask,
                         const Matrix& attr_preds, const Matrix& attr_targets, const Matrix& attr_mask) {
  ReconLosses out;
  if (edge_logits.size() == 0 && attr_preds.size() == 0) throw UsageError("recon_losses: no slots at all");
  Tape t(false);
  const double edge_valid = edge_mask.size() ? edge_mask.sum() : static_cast<double>(edge_logits.size());
  if (edge_logits.size() != 0) {
    if (edge_valid <= 0.0) throw UsageError("recon_losses: every edge slot is padded");
    out.bce = bce_with_logits(t.constant(edge_logits), edge_targets, edge_mask, edge_valid).value()(0, 0);
  }
  if (attr_preds.size() != 0) {
    const double attr_valid = attr_mask.size() ? attr_mask.sum() : static_cast<double>(attr_preds.size());
    if (attr_valid <= 0.0) throw UsageError("recon_losses: every attribute slot is padded");
    out.mse = squared_error(t.constant(attr_preds), attr_targets, attr_mask, attr_valid).value()(0, 0);
  }
  return out;
}

}  // namespace gvrnn::nn
