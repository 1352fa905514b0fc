#include "gvrnn/graph.hpp"

#include <algorithm>
#include <deque>
#include <string>

#include "gvrnn/error.hpp"
#include "gvrnn/hash.hpp"

namespace gvrnn {

Graph::Graph(int n) {
  if (n < 0) throw DataError("graph: negative node count");
  adj_.resize(static_cast<std::size_t>(n));
}

Graph::Graph(int n, std::span<const Edge> edges) : Graph(n) {
  for (const auto& [u, v] : edges) add_edge(u, v);
}

void Graph::add_edge(int u, int v) {
  const int n = num_nodes();
  if (u < 0 || v < 0 || u >= n || v >= n) {
    throw DataError("graph: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                    ") has an endpoint outside [0, " + std::to_string(n) + ")");
  }
  if (u == v) throw DataError("graph: self-loop on node " + std::to_string(u));
  auto& nu = adj_[static_cast<std::size_t>(u)];
  auto it = std::lower_bound(nu.begin(), nu.end(), v);
  if (it != nu.end() && *it == v) return;
  nu.insert(it, v);
  auto& nv = adj_[static_cast<std::size_t>(v)];
  nv.insert(std::lower_bound(nv.begin(), nv.end(), u), u);
  ++num_edges_;
}

bool Graph::has_edge(int u, int v) const {
  const auto& nu = adj_[static_cast<std::size_t>(u)];
  return std::binary_search(nu.begin(), nu.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges_);
  for (int u = 0; u < num_nodes(); ++u) {
    for (int v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

void Graph::set_attributes(int k, std::vector<double> values) {
  if (k < 0) throw DataError("graph: negative attribute dimension");
  if (values.size() != static_cast<std::size_t>(k) * adj_.size()) {
    throw DataError("graph: attribute matrix needs exactly one row of width " +
                    std::to_string(k) + " per node");
  }
  attr_dim_ = k;
  attrs_ = std::move(values);
  if (k == 0) attrs_.clear();
}

std::span<const double> Graph::attributes(int v) const {
  const auto k = static_cast<std::size_t>(attr_dim_);
  return {attrs_.data() + static_cast<std::size_t>(v) * k, k};
}

void Graph::set_community_labels(std::vector<int> labels) {
  if (!labels.empty() && labels.size() != adj_.size()) {
    throw DataError("graph: community labels need one entry per node");
  }
  labels_ = std::move(labels);
}

int Graph::first_unreachable() const {
  const int n = num_nodes();
  if (n == 0) return -1;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : neighbors(u)) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!seen[static_cast<std::size_t>(v)]) return v;
  }
  return -1;
}

bool Graph::is_connected() const { return first_unreachable() < 0; }

Graph relabel(const Graph& g, std::span<const int> order) {
  const int n = g.num_nodes();
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  for (int p = 0; p < n; ++p) pos[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = p;
  Graph out(n);
  for (const auto& [u, v] : g.edges()) out.add_edge(pos[static_cast<std::size_t>(u)], pos[static_cast<std::size_t>(v)]);
  if (g.has_attributes()) {
    const int k = g.attr_dim();
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(n * k));
    for (int p = 0; p < n; ++p) {
      auto row = g.attributes(order[static_cast<std::size_t>(p)]);
      x.insert(x.end(), row.begin(), row.end());
    }
    out.set_attributes(k, std::move(x));
  }
  if (g.has_labels()) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) labels[static_cast<std::size_t>(p)] = g.community_labels()[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])];
    out.set_community_labels(std::move(labels));
  }
  return out;
}

namespace {

void check_permutation(std::span<const int> order, int n) {
  if (order.size() != static_cast<std::size_t>(n)) {
    throw DataError("order has " + std::to_string(order.size()) + " entries for a " +
                    std::to_string(n) + "-node graph");
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int v : order) {
    if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) {
      throw DataError("order is not a permutation of the graph's nodes");
    }
    seen[static_cast<std::size_t>(v)] = 1;
  }
}

}  // namespace

std::vector<int> bfs_order(const Graph& g, Rng& rng) {
  const int n = g.num_nodes();
  if (n < 1) throw DataError("bfs_order: empty graph");
  // label[v] is v's label after the random relabeling; node[l] inverts it.
  const std::vector<int> node = rng.permutation(n);
  std::vector<int> label(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) label[static_cast<std::size_t>(node[static_cast<std::size_t>(l)])] = l;

  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  std::deque<int> queue{node[0]};
  seen[static_cast<std::size_t>(node[0])] = 1;
  std::vector<int> next;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    order.push_back(u);
    next.clear();
    for (int v : g.neighbors(u)) {
      if (!seen[static_cast<std::size_t>(v)]) next.push_back(v);
    }
    std::sort(next.begin(), next.end(), [&](int a, int b) {
      return label[static_cast<std::size_t>(a)] < label[static_cast<std::size_t>(b)];
    });
    for (int v : next) {
      seen[static_cast<std::size_t>(v)] = 1;
      queue.push_back(v);
    }
  }
  if (static_cast<int>(order.size()) != n) {
    for (int v = 0; v < n; ++v) {
      if (!seen[static_cast<std::size_t>(v)]) {
        throw DataError("bfs_order: graph is disconnected; node " + std::to_string(v) +
                        " is unreachable from the BFS root " + std::to_string(node[0]));
      }
    }
  }
  return order;
}

int required_bandwidth(const Graph& g, std::span<const int> order) {
  const int n = g.num_nodes();
  check_permutation(order, n);
  std::vector<int> pos(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) pos[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = p;
  int m = 0;
  for (const auto& [u, v] : g.edges()) {
    m = std::max(m, std::abs(pos[static_cast<std::size_t>(u)] - pos[static_cast<std::size_t>(v)]));
  }
  return m;
}

BfsSequence encode_sequence(const Graph& g, std::span<const int> order, int m) {
  const int n = g.num_nodes();
  if (m < 1) throw DataError("encode_sequence: bandwidth must be at least 1");
  check_permutation(order, n);
  std::vector<int> pos(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) pos[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = p;
  for (const auto& [u, v] : g.edges()) {
    const int d = std::abs(pos[static_cast<std::size_t>(u)] - pos[static_cast<std::size_t>(v)]);
    if (d > m) {
      throw DataError("encode_sequence: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                      ") spans lookback " + std::to_string(d) + " > bandwidth " + std::to_string(m));
    }
  }

  BfsSequence seq;
  seq.n = n;
  seq.m = m;
  seq.permutation.assign(order.begin(), order.end());
  for (int i = 2; i <= n; ++i) {
    const int w = row_width(i, m);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w));
    const int cur = order[static_cast<std::size_t>(i - 1)];
    for (int j = 1; j <= w; ++j) {
      row[static_cast<std::size_t>(j - 1)] = g.has_edge(order[static_cast<std::size_t>(i - 1 - j)], cur) ? 1 : 0;
    }
    seq.s_rows.push_back(std::move(row));
  }
  if (g.has_attributes()) {
    seq.k = g.attr_dim();
    for (int p = 0; p < n; ++p) {
      auto row = g.attributes(order[static_cast<std::size_t>(p)]);
      seq.x_rows.emplace_back(row.begin(), row.end());
    }
  }
  return seq;
}

Graph decode_graph(const BfsSequence& seq) {
  const int n = seq.n;
  if (n < 0 || seq.m < 1) throw DataError("decode_graph: invalid n or m");
  const auto expected_rows = static_cast<std::size_t>(n > 0 ? n - 1 : 0);
  if (seq.s_rows.size() != expected_rows) {
    throw DataError("decode_graph: expected " + std::to_string(expected_rows) + " rows, got " +
                    std::to_string(seq.s_rows.size()));
  }
  Graph g(n);
  for (int i = 2; i <= n; ++i) {
    const auto& row = seq.s_rows[static_cast<std::size_t>(i - 2)];
    const int w = row_width(i, seq.m);
    if (row.size() != static_cast<std::size_t>(w)) {
      throw DataError("decode_graph: row for position " + std::to_string(i) + " has width " +
                      std::to_string(row.size()) + ", expected " + std::to_string(w));
    }
    for (int j = 1; j <= w; ++j) {
      const auto bit = row[static_cast<std::size_t>(j - 1)];
      if (bit > 1) throw DataError("decode_graph: non-binary entry in row " + std::to_string(i));
      if (bit) g.add_edge(i - 1 - j, i - 1);
    }
  }
  if (seq.k > 0) {
    if (seq.x_rows.size() != static_cast<std::size_t>(n)) {
      throw DataError("decode_graph: attribute rows do not match node count");
    }
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(n * seq.k));
    for (const auto& row : seq.x_rows) {
      if (row.size() != static_cast<std::size_t>(seq.k)) throw DataError("decode_graph: attribute row width mismatch");
      x.insert(x.end(), row.begin(), row.end());
    }
    g.set_attributes(seq.k, std::move(x));
  }
  return g;
}

int estimate_bandwidth(std::span<const Graph> graphs, int samples_per_graph, Rng& rng) {
  if (graphs.empty()) throw DataError("estimate_bandwidth: no graphs");
  if (samples_per_graph < 1) throw DataError("estimate_bandwidth: samples_per_graph must be >= 1");
  // Each graph's orders come from a stream keyed by its own content, so the
  // estimate over a superset is never below the estimate over a subset.
  const std::uint64_t base = rng.next_u64();
  int m = 1;
  for (const auto& g : graphs) {
    Rng local(derive_seed(base, graph_fingerprint(g)));
    for (int s = 0; s < samples_per_graph; ++s) {
      m = std::max(m, required_bandwidth(g, bfs_order(g, local)));
    }
  }
  return m;
}

}  // namespace gvrnn
