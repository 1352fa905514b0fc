#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gvrnn/nn/parameters.hpp"
#include "gvrnn/nn/tape.hpp"
#include "gvrnn/rng.hpp"

namespace gvrnn::nn {

/// Diagonal Gaussian. logvar is clamped to [kLogvarMin, kLogvarMax] wherever
/// the model produces one.
struct GaussianParams {
  Vector mean;
  Vector logvar;
};

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
Matrix uniform_fan_in(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng);
Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Parameter layout: <prefix>.weight (in x out), <prefix>.bias (1 x out).
void add_linear(ParameterSet& params, const std::string& prefix, int in, int out, Rng& rng);
/// <prefix>.fc<i>.{weight,bias} for consecutive pairs of `sizes`.
void add_mlp(ParameterSet& params, const std::string& prefix, const std::vector<int>& sizes, Rng& rng);
/// <prefix>.layer<l>.{w_ih,w_hh,b_ih,b_hh}; layer 0 reads `input`, the rest
/// read the layer below.
void add_gru_stack(ParameterSet& params, const std::string& prefix, int input, int hidden, int layers, Rng& rng);

Var linear(Tape& t, const ParameterSet& params, const std::string& prefix, Var x);

/// affine-ReLU-...-affine; the output layer is linear.
Var mlp_forward(Tape& t, const ParameterSet& params, const std::string& prefix, int layers, Var x);

/// Advances every layer once. `state` holds one hidden matrix per layer and
/// is replaced by the new states; the return value is the top layer.
Var gru_stack_step(Tape& t, const ParameterSet& params, const std::string& prefix, Var x, std::vector<Var>& state);

/// Value-level versions for single vectors.
Vector mlp_forward(const ParameterSet& params, const std::string& prefix, int layers, const Vector& x);
std::pair<Vector, std::vector<Vector>> gru_stack_step(const ParameterSet& params, const std::string& prefix,
                                                     const Vector& x, const std::vector<Vector>& state);

Vector reparameterize(const GaussianParams& g, Rng& rng);
/// Closed form, summed over dimensions.
double kl_diag_gaussians(const GaussianParams& q, const GaussianParams& p);

struct ReconLosses {
  double bce = 0.0;
  double mse = 0.0;
};

/// Masked means; a zero mask entry marks a padded slot. Throws UsageError
/// when a non-empty input has no valid slot. Empty attribute matrices give
/// mse = 0.
ReconLosses recon_losses(const Matrix& edge_logits, const Matrix& edge_targets, const Matrix& edge_mask,
                         const Matrix& attr_preds, const Matrix& attr_targets, const Matrix& attr_mask);

}  // namespace gvrnn::nn
