#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gvrnn/graph.hpp"
#include "gvrnn/model.hpp"
#include "gvrnn/nn/checkpoint.hpp"
#include "gvrnn/rng.hpp"

namespace gvrnn::train {

struct TrainConfig {
  std::int64_t steps = 6000;
  int batch_size = 32;
  double lr0 = 1e-3;
  double decay_factor = 0.3;
  std::vector<std::int64_t> decay_steps{12800, 32000};
  std::uint64_t seed = 0;
  std::string dataset_path;
  model::ModelConfig model = [] {
    model::ModelConfig c;
    c.m = 0;
    return c;
  }();
  /// model.m == 0 means "estimate from the training split".
  bool auto_bandwidth = true;
  /// Halve node_hidden when the largest training graph has <= 20 nodes.
  bool auto_half_hidden = true;
  int bandwidth_samples = 10;
  int log_every = 10;
  std::int64_t checkpoint_every = 1000;
  /// One BFS order per graph for the whole run instead of a fresh one per visit.
  bool fixed_order = false;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  /// "desk" (6,000 steps) or "paper" (36,000 steps).
  static TrainConfig preset(const std::string& name);
};

double lr_at_step(const TrainConfig& cfg, std::int64_t step);

struct MetricsRow {
  std::int64_t step = 0;
  double lr = 0.0;
  double total = 0.0;
  double bce = 0.0;
  double mse = 0.0;
  double kl = 0.0;
};

std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);

/// Final model config for a training split: fills m and k from the data,
/// halves node_hidden for small graphs, and checks m against the estimated
/// bandwidth.
model::ModelConfig resolve_model_config(const TrainConfig& cfg, const std::vector<Graph>& train);

/// Owns the parameters, optimizer state and random stream of one run.
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::vector<Graph> train);
  /// Continues a run from a checkpoint written by `checkpoint()`.
  static Trainer resume(const nn::Checkpoint& ckpt, std::vector<Graph> train);

  /// Samples a batch, evaluates the bound at the current parameters, then
  /// applies one Adam update. The returned row describes the pre-update loss.
  MetricsRow step();

  /// Loss at the current parameters for a batch drawn from a copy of the
  /// random stream; leaves the trainer untouched.
  MetricsRow evaluate_next() const;

  std::int64_t current_step() const { return step_; }
  bool done() const { return step_ >= cfg_.steps; }
  const TrainConfig& config() const { return cfg_; }
  const model::ModelConfig& model_config() const { return cfg_.model; }
  const nn::ParameterSet& params() const { return params_; }
  const Rng& rng() const { return rng_; }

  nn::Checkpoint checkpoint() const;

 private:
  Trainer() = default;
  std::vector<BfsSequence> sample_batch(Rng& rng) const;
  void prepare_orders();

  TrainConfig cfg_;
  std::vector<Graph> train_;
  nn::ParameterSet params_;
  Rng rng_;
  std::int64_t step_ = 0;
  std::vector<std::vector<int>> fixed_orders_;
};

struct RunResult {
  nn::Checkpoint final_checkpoint;
  std::vector<MetricsRow> metrics;
};

/// Trains to cfg.steps. When `run_dir` is non-empty it receives
/// config.json, metrics.tsv, checkpoints/step_<n>.ckpt and final.ckpt; a
/// non-finite loss writes diagnostic.ckpt and throws NumericError.
RunResult train_run(const TrainConfig& cfg, const std::vector<Graph>& train, const std::filesystem::path& run_dir = {},
                    const std::function<void(const MetricsRow&)>& on_log = {});

/// Continues from a checkpoint; metrics are appended to run_dir/metrics.tsv.
RunResult resume_run(const nn::Checkpoint& ckpt, const std::vector<Graph>& train,
                     const std::filesystem::path& run_dir = {},
                     const std::function<void(const MetricsRow&)>& on_log = {});

}  // namespace gvrnn::train
