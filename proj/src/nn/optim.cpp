#include "gvrnn/nn/optim.hpp"

#include <cmath>

#include "gvrnn/error.hpp"

namespace gvrnn::nn {

void adam_step(ParameterSet& params, const Gradients& grads, double lr, const AdamOptions& opts) {
  if (grads.size() != params.size()) throw UsageError("adam_step: gradients not aligned with parameters");
  for (const auto& [name, p] : params.entries()) {
    auto it = grads.find(name);
    if (it == grads.end()) throw UsageError("adam_step: missing gradient for " + name);
    const Matrix& g = it->second;
    if (g.rows() != p.value.rows() || g.cols() != p.value.cols()) throw UsageError("adam_step: gradient shape mismatch for " + name);
    if (!g.allFinite()) throw NumericError("adam_step: non-finite gradient for parameter " + name);
  }
  for (auto& [name, p] : params.entries()) {
    const Matrix& g = grads.at(name);
    ++p.steps;
    p.first_moment = opts.beta1 * p.first_moment + (1.0 - opts.beta1) * g;
    p.second_moment = opts.beta2 * p.second_moment + (1.0 - opts.beta2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(p.steps));
    const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(p.steps));
    p.value.array() -= lr * (p.first_moment.array() / c1) / ((p.second_moment.array() / c2).sqrt() + opts.eps);
  }
}

}  // namespace gvrnn::nn
