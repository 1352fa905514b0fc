#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gvrnn/graph.hpp"
#include "gvrnn/model.hpp"
#include "gvrnn/nn/checkpoint.hpp"
#include "gvrnn/rng.hpp"

namespace gvrnn::gen {

struct GenerationSpec {
  int count = 100;
  /// Hard node cap; 0 means the largest training graph recorded in the checkpoint.
  int max_n = 0;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Model config and weights of a checkpoint, plus its recorded node cap.
struct LoadedModel {
  model::ModelConfig config;
  nn::ParameterSet params;
  int max_train_nodes = 0;
  std::string fingerprint;
};

LoadedModel load_model(const nn::Checkpoint& ckpt);

/// Samples rows from the prior until an all-zero row (end of sequence) or
/// `max_n` nodes, then decodes them. The result is connected by construction.
Graph generate_graph(const nn::ParameterSet& params, const model::ModelConfig& config, int max_n, Rng& rng);

/// Graph j is drawn with its own stream derive_seed(spec.seed, j), so it
/// does not depend on `count` or on the thread schedule.
std::vector<Graph> generate_set(const LoadedModel& model, const GenerationSpec& spec);
std::vector<Graph> generate_set_serial(const LoadedModel& model, const GenerationSpec& spec);

nlohmann::json generation_manifest(const LoadedModel& model, const GenerationSpec& spec);

}  // namespace gvrnn::gen
