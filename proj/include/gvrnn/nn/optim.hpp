#pragma once

#include "gvrnn/nn/parameters.hpp"

namespace gvrnn::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update of every parameter; increments each
/// parameter's step count. Gradients must name exactly the parameters in
/// `params`. A non-finite gradient throws NumericError naming the parameter
/// before anything is modified.
void adam_step(ParameterSet& params, const Gradients& grads, double lr, const AdamOptions& opts = {});

}  // namespace gvrnn::nn
