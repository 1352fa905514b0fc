#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gvrnn/rng.hpp"

namespace gvrnn {

using Edge = std::pair<int, int>;

/// Undirected simple graph with optional real node attributes (n x k, row
/// major) and optional community tags. Neighbor lists stay sorted.
class Graph {
 public:
  Graph() = default;
  explicit Graph(int n);
  Graph(int n, std::span<const Edge> edges);

  int num_nodes() const { return static_cast<int>(adj_.size()); }
  std::size_t num_edges() const { return num_edges_; }

  /// Adds {u, v}. Throws DataError on self-loops or out-of-range endpoints;
  /// re-adding an existing edge is a no-op.
  void add_edge(int u, int v);
  bool has_edge(int u, int v) const;
  int degree(int v) const { return static_cast<int>(adj_[static_cast<std::size_t>(v)].size()); }
  const std::vector<int>& neighbors(int v) const { return adj_[static_cast<std::size_t>(v)]; }

  /// Edge list with u < v, lexicographically sorted.
  std::vector<Edge> edges() const;

  int attr_dim() const { return attr_dim_; }
  bool has_attributes() const { return attr_dim_ > 0; }
  /// Row-major n x k; throws DataError when the size does not match.
  void set_attributes(int k, std::vector<double> values);
  std::span<const double> attributes(int v) const;
  const std::vector<double>& attribute_matrix() const { return attrs_; }

  bool has_labels() const { return !labels_.empty(); }
  const std::vector<int>& community_labels() const { return labels_; }
  void set_community_labels(std::vector<int> labels);

  bool is_connected() const;
  /// First node (by index) not reachable from node 0, or -1.
  int first_unreachable() const;

  bool operator==(const Graph&) const = default;

 private:
  std::vector<std::vector<int>> adj_;
  std::size_t num_edges_ = 0;
  int attr_dim_ = 0;
  std::vector<double> attrs_;
  std::vector<int> labels_;
};

/// Graph relabeled so that node order[p] becomes node p. Attributes and
/// labels follow their nodes.
Graph relabel(const Graph& g, std::span<const int> order);

/// Sequence form of a graph under a node order. Row r of `s_rows` belongs
/// to BFS position i = r + 2 (1-based) and holds A[i-1, i], A[i-2, i], ...
/// newest predecessor first, with width min(i - 1, m).
struct BfsSequence {
  int n = 0;
  int m = 1;
  std::vector<std::vector<std::uint8_t>> s_rows;
  int k = 0;
  std::vector<std::vector<double>> x_rows;  // n rows when k > 0, else empty
  std::vector<int> permutation;

  bool operator==(const BfsSequence&) const = default;
};

inline int row_width(int position, int m) { return position - 1 < m ? position - 1 : m; }

std::vector<int> bfs_order(const Graph& g, Rng& rng);

BfsSequence encode_sequence(const Graph& g, std::span<const int> order, int m);

Graph decode_graph(const BfsSequence& seq);

/// Largest lookback carrying a true edge over `samples_per_graph` sampled
/// BFS orders of every graph (at least 1).
int estimate_bandwidth(std::span<const Graph> graphs, int samples_per_graph, Rng& rng);

/// Largest lookback with an edge under a specific order.
int required_bandwidth(const Graph& g, std::span<const int> order);

}  // namespace gvrnn
