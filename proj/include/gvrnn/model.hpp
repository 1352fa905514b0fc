#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gvrnn/graph.hpp"
#include "gvrnn/nn/layers.hpp"
#include "gvrnn/nn/parameters.hpp"
#include "gvrnn/nn/tape.hpp"
#include "gvrnn/rng.hpp"

namespace gvrnn::model {

enum class Variant { graphvrnn, graphvrnn_nlp, graphrnn };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

struct ModelConfig {
  Variant variant = Variant::graphvrnn;
  int m = 1;             // bandwidth
  int node_hidden = 128;
  int edge_hidden = 16;
  int node_layers = 4;
  int edge_layers = 4;
  int d_z = 64;
  int mlp_hidden = 0;    // width of the MLP hidden layers; 0 means node_hidden
  int k = 0;             // attribute dim, 0 disables the attribute decoder
  double beta = 1.0;

  void validate() const;
  bool variational() const { return variant != Variant::graphrnn; }
  bool learned_prior() const { return variant == Variant::graphvrnn; }
  int node_input() const { return m + k; }
  int mlp_width() const { return mlp_hidden > 0 ? mlp_hidden : node_hidden; }
  /// Width of the latent part of decoder inputs (0 for graphrnn).
  int latent_width() const { return variational() ? d_z : 0; }

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

/// Parameter layout (see init_model):
///   node_rnn.start, node_rnn.layer<l>.*      shared node-level GRU stack
///   posterior.fc<0..2>.*                       q(z_t | h_t), variational only
///   prior.fc<0..2>.*                           p(z_t | h_{t-1}), graphvrnn only
///   edge_init.*                                [z_t, h_{t-1}] -> edge GRU states
///   edge_rnn.start, edge_rnn.layer<l>.*        edge-level GRU stack
///   edge_out.*                                 top edge state -> logit
///   attr.fc<0..2>.*                            [z_t, h_{t-1}, S_t] -> X_t, k > 0 only
nn::ParameterSet init_model(const ModelConfig& config, Rng& rng);

/// Values a single step contributes to the bound. Step t (1-based) emits
/// the row of BFS position t (width min(t - 1, m)) and, for t <= n, the
/// attributes of node t. Step n + 1 is the all-zero end-of-sequence row.
struct StepOutputs {
  int step = 0;
  nn::Vector edge_logits;
  std::optional<nn::Vector> attr_pred;
  std::optional<nn::GaussianParams> q_params;
  std::optional<nn::GaussianParams> p_params;
  nn::Vector h_prev;
  nn::Vector eps;  // noise used for z_t (empty for graphrnn)
};

/// Teacher-forcing inputs for a batch, padded to a common length.
struct Batch {
  struct Row {
    int seq = 0;   // index into the batch
    int step = 0;  // t
    int width = 0;
  };

  int size = 0;
  int steps = 0;                       // T: longest sequence n + 1, plus padding
  std::vector<nn::Matrix> node_inputs; // j = 1..T at index j-1, B x (m + k)
  std::vector<Row> rows;               // active (seq, step) pairs, width descending
  std::vector<nn::Matrix> slot_inputs; // slot j>=2 at index j-2: previous bits, prefix rows
  std::vector<nn::Matrix> slot_targets;// slot j at index j-1: target bits, prefix rows
  nn::Matrix s_rows;                   // R x m, ground-truth S_t zero padded
  nn::Matrix attr_targets;             // R x k
  nn::Matrix attr_mask;                // R x k
  double edge_slots = 0.0;
  double attr_slots = 0.0;
};

/// Builds the padded batch. Every sequence must match the config's m and k.
/// `extra_steps` appends padding steps beyond the longest sequence.
Batch make_batch(std::span<const BfsSequence> sequences, const ModelConfig& config, int extra_steps = 0);

struct ForwardOptions {
  /// Test hook: replaces z_t with zeros in every decoder input.
  bool zero_latent = false;
  /// Fill per-step outputs (costs a copy of every head output).
  bool collect_outputs = false;
};

struct ForwardResult {
  nn::Var bce;
  nn::Var mse;
  nn::Var kl;
  std::vector<std::vector<StepOutputs>> outputs;  // per sequence, when collected
};

/// One shared node-RNN pass over teacher-forced inputs, then every head
/// evaluated on all active steps at once. Noise for z is drawn from `rng`
/// in active-row order.
ForwardResult forward_teacher_forced(nn::Tape& tape, const nn::ParameterSet& params, const ModelConfig& config,
                                     const Batch& batch, Rng& rng, const ForwardOptions& opts = {});

struct LossTerms {
  nn::Var total_var;
  double total = 0.0;
  double bce = 0.0;
  double mse = 0.0;
  double kl = 0.0;
};

/// total = bce + mse + beta * kl, where bce and mse are means over valid
/// slots and kl is the mean per active step of the KL summed over latent
/// dims. graphrnn reports kl = 0.
LossTerms elbo_loss(nn::Tape& tape, const ForwardResult& fwd, const ModelConfig& config, double beta);

/// The same bound assembled from collected StepOutputs alone.
LossTerms elbo_loss(const std::vector<std::vector<StepOutputs>>& outputs, std::span<const BfsSequence> targets,
                    const ModelConfig& config, double beta);

/// Recurrent state carried between sample_step calls.
struct SamplerState {
  std::vector<nn::Matrix> layers;
  int step = 0;
};

struct SampledStep {
  std::vector<std::uint8_t> s_row;
  std::vector<double> x_row;
};

/// Advances the node RNN on (prev_s, prev_x) (on the start token for the
/// first call), draws z_t from the prior, samples the edge row slot by slot
/// and emits the attribute decoder mean.
SampledStep sample_step(const nn::ParameterSet& params, const ModelConfig& config, SamplerState& state,
                        std::span<const std::uint8_t> prev_s, std::span<const double> prev_x, Rng& rng);

}  // namespace gvrnn::model
