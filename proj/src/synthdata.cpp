#include "gvrnn/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gvrnn/error.hpp"

namespace gvrnn::synth {

void CommunitySpec::validate() const {
  if (sizes.empty()) throw DataError("community spec: no communities");
  if (p_intra.size() != sizes.size()) throw DataError("community spec: p_intra length differs from sizes");
  for (int s : sizes) {
    if (s <= 0) throw DataError("community spec: community sizes must be positive");
  }
  auto bad_p = [](double p) { return !(p >= 0.0 && p <= 1.0); };
  if (std::any_of(p_intra.begin(), p_intra.end(), bad_p) || bad_p(p_inter)) {
    throw DataError("community spec: probabilities must lie in [0, 1]");
  }
  if (!attr_dists.empty() && attr_dists.size() != sizes.size()) {
    throw DataError("community spec: attr_dists length differs from sizes");
  }
  for (const auto& d : attr_dists) {
    if (!(d.stddev >= 0.0) || !std::isfinite(d.mean)) throw DataError("community spec: invalid attribute distribution");
  }
}

std::string CommunitySpec::describe() const {
  std::ostringstream os;
  os << "sizes=[";
  for (std::size_t i = 0; i < sizes.size(); ++i) os << (i ? "," : "") << sizes[i];
  os << "] p_intra=[";
  for (std::size_t i = 0; i < p_intra.size(); ++i) os << (i ? "," : "") << p_intra[i];
  os << "] p_inter=" << p_inter;
  return os.str();
}

Graph gen_community_graph(const CommunitySpec& spec, Rng& rng, int retry_budget) {
  spec.validate();
  const int n = std::accumulate(spec.sizes.begin(), spec.sizes.end(), 0);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < spec.sizes.size(); ++c) labels.insert(labels.end(), static_cast<std::size_t>(spec.sizes[c]), static_cast<int>(c));

  for (int attempt = 0; attempt < retry_budget; ++attempt) {
    Graph g(n);
    for (int u = 0; u < n; ++u) {
      for (int v = u + 1; v < n; ++v) {
        const int cu = labels[static_cast<std::size_t>(u)];
        const double p = cu == labels[static_cast<std::size_t>(v)] ? spec.p_intra[static_cast<std::size_t>(cu)] : spec.p_inter;
        if (rng.bernoulli(p)) g.add_edge(u, v);
      }
    }
    if (!g.is_connected()) continue;
    if (!spec.attr_dists.empty()) {
      std::vector<double> x(static_cast<std::size_t>(n));
      for (int v = 0; v < n; ++v) {
        const auto& d = spec.attr_dists[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])];
        x[static_cast<std::size_t>(v)] = d.mean + d.stddev * rng.normal();
      }
      g.set_attributes(1, std::move(x));
    }
    g.set_community_labels(labels);
    return g;
  }
  throw DataError("gen_community_graph: no connected sample within " + std::to_string(retry_budget) +
                  " attempts for spec " + spec.describe());
}

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "com-small") return DatasetKind::com_small;
  if (name == "com-mix") return DatasetKind::com_mix;
  if (name == "com-attr") return DatasetKind::com_attr;
  if (name == "ego-surrogate") return DatasetKind::ego_surrogate;
  throw UsageError("unknown dataset '" + name + "' (expected com-small, com-mix, com-attr, ego-surrogate)");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::com_small: return "com-small";
    case DatasetKind::com_mix: return "com-mix";
    case DatasetKind::com_attr: return "com-attr";
    case DatasetKind::ego_surrogate: return "ego-surrogate";
  }
  return "unknown";
}

int default_count(DatasetKind kind) {
  return kind == DatasetKind::ego_surrogate ? 200 : 500;
}

std::pair<int, int> node_range(DatasetKind kind, const DatasetOptions& opts) {
  std::pair<int, int> r;
  switch (kind) {
    case DatasetKind::com_small: r = {12, 20}; break;
    case DatasetKind::com_mix: r = {24, 40}; break;
    case DatasetKind::com_attr: r = {30, 60}; break;
    case DatasetKind::ego_surrogate: r = {4, 18}; break;
  }
  if (opts.min_nodes) r.first = *opts.min_nodes;
  if (opts.max_nodes) r.second = *opts.max_nodes;
  const int floor = kind == DatasetKind::ego_surrogate ? 1 : 2;
  if (r.first < floor || r.second < r.first) {
    throw UsageError("invalid node range [" + std::to_string(r.first) + ", " + std::to_string(r.second) +
                     "] for " + to_string(kind));
  }
  return r;
}

namespace {

constexpr double kInter = 0.05;

std::vector<int> halves(int n) { return {n - n / 2, n / 2}; }

Graph gen_ego_surrogate(Rng& rng, int n) {
  Graph g(n);
  for (int v = 1; v < n; ++v) g.add_edge(0, v);
  for (int u = 1; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.bernoulli(0.1)) g.add_edge(u, v);
    }
  }
  return g;
}

}  // namespace

CommunitySpec sample_community_spec(DatasetKind kind, Rng& rng, const DatasetOptions& opts) {
  const auto [lo, hi] = node_range(kind, opts);
  const int n = rng.uniform_int(lo, hi);
  CommunitySpec spec;
  spec.sizes = halves(n);
  spec.p_inter = kInter;
  switch (kind) {
    case DatasetKind::com_small:
      spec.p_intra = {0.7, 0.7};
      break;
    case DatasetKind::com_mix:
      // Type A (equal 0.3/0.3) or type B (0.4/0.6), equiprobable.
      spec.p_intra = rng.bernoulli(0.5) ? std::vector<double>{0.3, 0.3} : std::vector<double>{0.4, 0.6};
      break;
    case DatasetKind::com_attr:
      spec.p_intra = {0.3, 0.3};
      spec.attr_dists = {{1.5, 0.75}, {-0.5, 1.0}};
      break;
    case DatasetKind::ego_surrogate:
      throw UsageError("ego-surrogate is not a community dataset");
  }
  return spec;
}

Graph gen_dataset_graph(DatasetKind kind, std::uint64_t seed, std::uint64_t index, const DatasetOptions& opts) {
  Rng rng(derive_seed(seed, index));
  if (kind == DatasetKind::ego_surrogate) {
    const auto [lo, hi] = node_range(kind, opts);
    return gen_ego_surrogate(rng, rng.uniform_int(lo, hi));
  }
  const auto spec = sample_community_spec(kind, rng, opts);
  return gen_community_graph(spec, rng);
}

std::vector<Graph> gen_dataset(DatasetKind kind, int count, std::uint64_t seed, const DatasetOptions& opts) {
  if (count < 1) throw UsageError("gen_dataset: count must be >= 1");
  node_range(kind, opts);
  std::vector<Graph> out(static_cast<std::size_t>(count));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = gen_dataset_graph(kind, seed, static_cast<std::uint64_t>(i), opts);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<Graph> gen_dataset_serial(DatasetKind kind, int count, std::uint64_t seed, const DatasetOptions& opts) {
  if (count < 1) throw UsageError("gen_dataset: count must be >= 1");
  std::vector<Graph> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(gen_dataset_graph(kind, seed, static_cast<std::uint64_t>(i), opts));
  return out;
}

nlohmann::json dataset_manifest(DatasetKind kind, int count, std::uint64_t seed, const DatasetOptions& opts) {
  const auto [lo, hi] = node_range(kind, opts);
  nlohmann::json params;
  params["min_nodes"] = lo;
  params["max_nodes"] = hi;
  switch (kind) {
    case DatasetKind::com_small:
      params["p_intra"] = {0.7, 0.7};
      params["p_inter"] = kInter;
      break;
    case DatasetKind::com_mix:
      params["types"] = {{{"p_intra", {0.3, 0.3}}, {"weight", 0.5}}, {{"p_intra", {0.4, 0.6}}, {"weight", 0.5}}};
      params["p_inter"] = kInter;
      break;
    case DatasetKind::com_attr:
      params["p_intra"] = {0.3, 0.3};
      params["p_inter"] = kInter;
      params["attributes"] = {{{"mean", 1.5}, {"stddev", 0.75}}, {{"mean", -0.5}, {"stddev", 1.0}}};
      break;
    case DatasetKind::ego_surrogate:
      params["hub"] = true;
      params["p_peripheral"] = 0.1;
      break;
  }
  params["odd_split"] = "extra node in community 1";
  params["connectivity_retries"] = kDefaultRetryBudget;
  nlohmann::json m;
  m["generator"] = to_string(kind);
  m["params"] = params;
  m["seed"] = seed;
  m["count"] = count;
  m["surrogate"] = kind == DatasetKind::ego_surrogate;
  return m;
}

Split split_dataset(const std::vector<Graph>& graphs, double ratio, Rng& rng) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("split_dataset: ratio must be in (0, 1)");
  const int n = static_cast<int>(graphs.size());
  if (n < 2) throw DataError("split_dataset: need at least 2 graphs");
  const auto idx = rng.permutation(n);
  int n_train = static_cast<int>(std::floor(ratio * n + 1e-9));
  n_train = std::clamp(n_train, 1, n - 1);
  Split s;
  for (int i = 0; i < n; ++i) {
    (i < n_train ? s.train : s.test).push_back(graphs[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
  }
  return s;
}

}  // namespace gvrnn::synth
