#include "gvrnn/diagnostics.hpp"

#include <memory>

#include "gvrnn/synthdata.hpp"

namespace gvrnn::diag {

nn::LossFn frozen_loss(const model::ModelConfig& config, std::vector<BfsSequence> batch, std::uint64_t noise_seed) {
  auto b = std::make_shared<const model::Batch>(model::make_batch(batch, config));
  return [config, b, noise_seed](const nn::ParameterSet& params, nn::Gradients* grads) {
    Rng noise(noise_seed);
    nn::Tape tape(grads != nullptr);
    auto fwd = model::forward_teacher_forced(tape, params, config, *b, noise);
    auto loss = model::elbo_loss(tape, fwd, config, config.beta);
    if (grads) {
      tape.backward(loss.total_var);
      *grads = tape.gradients(params);
    }
    return loss.total;
  };
}

TinyProblem tiny_problem(model::Variant variant, std::uint64_t seed) {
  TinyProblem p;
  Rng rng(seed);
  synth::CommunitySpec spec;
  spec.sizes = {4, 3};
  spec.p_intra = {0.6, 0.6};
  spec.p_inter = 0.2;
  spec.attr_dists = {{0.5, 0.3}, {-0.5, 0.3}};
  std::vector<Graph> graphs;
  for (int i = 0; i < 3; ++i) graphs.push_back(synth::gen_community_graph(spec, rng));

  std::vector<std::vector<int>> orders;
  int m = 1;
  for (const auto& g : graphs) {
    orders.push_back(bfs_order(g, rng));
    m = std::max(m, required_bandwidth(g, orders.back()));
  }
  p.config.variant = variant;
  p.config.m = m;
  p.config.k = 1;
  p.config.node_hidden = 8;
  p.config.edge_hidden = 4;
  p.config.node_layers = 2;
  p.config.edge_layers = 2;
  p.config.d_z = 4;
  p.config.beta = 0.7;
  for (std::size_t i = 0; i < graphs.size(); ++i) p.batch.push_back(encode_sequence(graphs[i], orders[i], m));
  p.params = model::init_model(p.config, rng);
  return p;
}

nn::GradCheckReport check_variant_gradients(model::Variant variant, std::uint64_t seed, const nn::GradCheckOptions& opts) {
  auto p = tiny_problem(variant, seed);
  auto loss = frozen_loss(p.config, p.batch, derive_seed(seed, 1));
  Rng probe_rng(derive_seed(seed, 2));
  return nn::gradient_check(loss, p.params, probe_rng, opts);
}

}  // namespace gvrnn::diag
