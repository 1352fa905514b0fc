#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "gvrnn/graph.hpp"

namespace gvrnn {

inline constexpr int kGraphSetVersion = 1;

/// Graph-set file, version 1. Line oriented; blank lines and lines starting
/// with '#' are ignored after the header.
///
///   GVRNN-GRAPHSET 1 {manifest json on one line}
///   graph <n> <k> <num_edges> <labeled:0|1>
///   e <u0> <v0> <u1> <v1> ...          edge endpoints, 0-based
///   x <a_0> ... <a_{k-1}>              one line per node when k > 0
///   c <l_0> ... <l_{n-1}>              when labeled
///
/// Reals are written in shortest round-trip form.
struct GraphSet {
  nlohmann::json manifest = nlohmann::json::object();
  std::vector<Graph> graphs;
};

void save_graph_set(const GraphSet& set, const std::filesystem::path& path);
GraphSet load_graph_set(const std::filesystem::path& path);

inline void save_graphs(const std::vector<Graph>& graphs, const std::filesystem::path& path,
                        nlohmann::json manifest = nlohmann::json::object()) {
  save_graph_set(GraphSet{std::move(manifest), graphs}, path);
}
inline std::vector<Graph> load_graphs(const std::filesystem::path& path) {
  return load_graph_set(path).graphs;
}

}  // namespace gvrnn
