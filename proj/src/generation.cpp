#include "gvrnn/generation.hpp"

#include <algorithm>
#include <numeric>

#include "gvrnn/error.hpp"
#include "gvrnn/hash.hpp"

namespace gvrnn::gen {

void GenerationSpec::validate() const {
  if (count < 1) throw UsageError("generation: count must be >= 1");
  if (max_n < 0) throw UsageError("generation: max_n must be >= 1 (or 0 for the checkpoint default)");
}

nlohmann::json GenerationSpec::to_json() const { return {{"count", count}, {"max_n", max_n}, {"seed", seed}}; }

LoadedModel load_model(const nn::Checkpoint& ckpt) {
  LoadedModel lm;
  if (!ckpt.meta.contains("model")) throw DataError("checkpoint has no model config");
  lm.config = model::ModelConfig::from_json(ckpt.meta.at("model"));
  lm.params = ckpt.params;
  lm.max_train_nodes = ckpt.meta.value("max_train_nodes", 0);

  // Every parameter the config expects must be present with the right shape.
  Rng probe(0);
  const auto expected = model::init_model(lm.config, probe);
  for (const auto& [name, p] : expected.entries()) {
    const auto it = lm.params.entries().find(name);
    if (it == lm.params.entries().end()) throw DataError("checkpoint is missing parameter " + name);
    if (it->second.value.rows() != p.value.rows() || it->second.value.cols() != p.value.cols()) {
      throw DataError("checkpoint parameter " + name + " has the wrong shape");
    }
  }
  if (lm.params.entries().size() != expected.entries().size()) throw DataError("checkpoint has unexpected parameters");

  Fnv1a h;
  h.update(nn::serialize_checkpoint(ckpt));
  lm.fingerprint = h.hex();
  return lm;
}

Graph generate_graph(const nn::ParameterSet& params, const model::ModelConfig& config, int max_n, Rng& rng) {
  if (max_n < 1) throw UsageError("generate_graph: max_n must be >= 1");
  BfsSequence seq;
  seq.m = config.m;
  seq.k = config.k;
  model::SamplerState state;
  std::vector<std::uint8_t> prev_s;
  std::vector<double> prev_x;
  for (int t = 1; t <= max_n; ++t) {
    auto out = model::sample_step(params, config, state, prev_s, prev_x, rng);
    if (t >= 2) {
      if (std::none_of(out.s_row.begin(), out.s_row.end(), [](std::uint8_t b) { return b != 0; })) break;
      seq.s_rows.push_back(out.s_row);
    }
    if (config.k > 0) seq.x_rows.push_back(out.x_row);
    seq.n = t;
    prev_s = std::move(out.s_row);
    prev_x = std::move(out.x_row);
  }
  seq.permutation.resize(static_cast<std::size_t>(seq.n));
  std::iota(seq.permutation.begin(), seq.permutation.end(), 0);
  return decode_graph(seq);
}

namespace {

int resolve_cap(const LoadedModel& model, const GenerationSpec& spec) {
  spec.validate();
  const int cap = spec.max_n > 0 ? spec.max_n : model.max_train_nodes;
  if (cap < 1) throw UsageError("generation: checkpoint records no node cap; pass max_n");
  return cap;
}

}  // namespace

std::vector<Graph> generate_set(const LoadedModel& model, const GenerationSpec& spec) {
  const int cap = resolve_cap(model, spec);
  std::vector<Graph> out(static_cast<std::size_t>(spec.count));
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < spec.count; ++j) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(j)));
    out[static_cast<std::size_t>(j)] = generate_graph(model.params, model.config, cap, rng);
  }
  return out;
}

std::vector<Graph> generate_set_serial(const LoadedModel& model, const GenerationSpec& spec) {
  const int cap = resolve_cap(model, spec);
  std::vector<Graph> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int j = 0; j < spec.count; ++j) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(j)));
    out.push_back(generate_graph(model.params, model.config, cap, rng));
  }
  return out;
}

nlohmann::json generation_manifest(const LoadedModel& model, const GenerationSpec& spec) {
  return {{"generator", "gvrnn-sample"},
          {"checkpoint_fingerprint", model.fingerprint},
          {"model", model.config.to_json()},
          {"spec", spec.to_json()},
          {"max_n_effective", spec.max_n > 0 ? spec.max_n : model.max_train_nodes}};
}

}  // namespace gvrnn::gen
