#pragma once

#include <functional>
#include <string>

#include "gvrnn/nn/parameters.hpp"
#include "gvrnn/rng.hpp"

namespace gvrnn::nn {

/// Loss as a function of parameters. When `grads` is non-null the function
/// also fills reverse-mode gradients. Must be deterministic (freeze noise).
using LossFn = std::function<double(const ParameterSet& params, Gradients* grads)>;

struct GradCheckOptions {
  int probes = 200;
  double step = 1e-4;
  /// Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  int probes = 0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares reverse-mode gradients with central differences on coordinates
/// drawn uniformly over all parameter scalars.
GradCheckReport gradient_check(const LossFn& loss_fn, const ParameterSet& params, Rng& rng,
                               const GradCheckOptions& opts = {});

}  // namespace gvrnn::nn
