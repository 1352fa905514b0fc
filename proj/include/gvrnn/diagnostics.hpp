#pragma once

#include <cstdint>
#include <vector>

#include "gvrnn/graph.hpp"
#include "gvrnn/model.hpp"
#include "gvrnn/nn/gradcheck.hpp"

namespace gvrnn::diag {

/// The training loss on a fixed batch with the latent noise frozen: every
/// call redraws eps from Rng(noise_seed), so the loss is a deterministic
/// function of the parameters.
nn::LossFn frozen_loss(const model::ModelConfig& config, std::vector<BfsSequence> batch, std::uint64_t noise_seed);

/// Tiny model (node_hidden 8, edge_hidden 4, d_z 4, two layers each, one
/// attribute) and a batch of small attributed community graphs.
struct TinyProblem {
  model::ModelConfig config;
  nn::ParameterSet params;
  std::vector<BfsSequence> batch;
};

TinyProblem tiny_problem(model::Variant variant, std::uint64_t seed);

nn::GradCheckReport check_variant_gradients(model::Variant variant, std::uint64_t seed,
                                            const nn::GradCheckOptions& opts = {});

}  // namespace gvrnn::diag
