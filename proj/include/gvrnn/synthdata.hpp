#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gvrnn/graph.hpp"
#include "gvrnn/rng.hpp"

namespace gvrnn::synth {

struct NormalParams {
  double mean = 0.0;
  double stddev = 1.0;
};

/// Two (or more) block community model. Community c owns a contiguous run
/// of node indices and tags them with label c.
struct CommunitySpec {
  std::vector<int> sizes;
  std::vector<double> p_intra;
  double p_inter = 0.0;
  std::vector<NormalParams> attr_dists;  // empty: no attributes

  /// Throws DataError describing the first violated constraint.
  void validate() const;
  std::string describe() const;
};

inline constexpr int kDefaultRetryBudget = 1000;

Graph gen_community_graph(const CommunitySpec& spec, Rng& rng, int retry_budget = kDefaultRetryBudget);

enum class DatasetKind { com_small, com_mix, com_attr, ego_surrogate };

DatasetKind parse_dataset_kind(const std::string& name);
std::string to_string(DatasetKind kind);
int default_count(DatasetKind kind);

/// Node-count range overrides (e.g. a reduced Com-attr).
struct DatasetOptions {
  std::optional<int> min_nodes;
  std::optional<int> max_nodes;
};

std::pair<int, int> node_range(DatasetKind kind, const DatasetOptions& opts = {});

/// Graph `index` of a dataset: a pure function of (kind, seed, index).
Graph gen_dataset_graph(DatasetKind kind, std::uint64_t seed, std::uint64_t index,
                        const DatasetOptions& opts = {});

/// Parallel over graphs; output does not depend on the thread count.
std::vector<Graph> gen_dataset(DatasetKind kind, int count, std::uint64_t seed,
                               const DatasetOptions& opts = {});
std::vector<Graph> gen_dataset_serial(DatasetKind kind, int count, std::uint64_t seed,
                                      const DatasetOptions& opts = {});

/// Generator name, parameters, seed and count as a manifest object.
nlohmann::json dataset_manifest(DatasetKind kind, int count, std::uint64_t seed,
                                const DatasetOptions& opts = {});

/// Draws the per-graph community spec (node count, and for Com-mix the
/// graph type) for the community datasets. Not defined for ego-surrogate.
CommunitySpec sample_community_spec(DatasetKind kind, Rng& rng, const DatasetOptions& opts = {});

struct Split {
  std::vector<Graph> train;
  std::vector<Graph> test;
};

Split split_dataset(const std::vector<Graph>& graphs, double ratio, Rng& rng);

}  // namespace gvrnn::synth
