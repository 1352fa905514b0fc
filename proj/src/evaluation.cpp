#include "gvrnn/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gvrnn/error.hpp"

namespace gvrnn::eval {

namespace {

std::int64_t choose2(std::int64_t x) { return x < 2 ? 0 : x * (x - 1) / 2; }
std::int64_t choose3(std::int64_t x) { return x < 3 ? 0 : x * (x - 1) * (x - 2) / 6; }

// Triangle count per node.
std::vector<std::int64_t> triangles(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<std::int64_t> t(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v) {
    const auto& nv = g.neighbors(v);
    for (std::size_t i = 0; i < nv.size(); ++i) {
      for (std::size_t j = i + 1; j < nv.size(); ++j) {
        if (g.has_edge(nv[i], nv[j])) ++t[static_cast<std::size_t>(v)];
      }
    }
  }
  return t;
}

double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

StatHistogram degree_histogram(const Graph& g) {
  const int n = g.num_nodes();
  StatHistogram h;
  h.mass.assign(static_cast<std::size_t>(std::max(n, 1)), 0.0);
  for (int v = 0; v < n; ++v) h.mass[static_cast<std::size_t>(g.degree(v))] += 1.0;
  if (n > 0) {
    for (double& m : h.mass) m /= n;
  }
  return h;
}

std::vector<double> clustering_coefficients(const Graph& g) {
  const auto t = triangles(g);
  std::vector<double> c(t.size(), 0.0);
  for (std::size_t v = 0; v < t.size(); ++v) {
    const auto pairs = choose2(g.degree(static_cast<int>(v)));
    if (pairs > 0) c[v] = static_cast<double>(t[v]) / static_cast<double>(pairs);
  }
  return c;
}

StatHistogram clustering_histogram(const Graph& g) {
  const int n = g.num_nodes();
  const auto t = triangles(g);
  StatHistogram h;
  h.mass.assign(kClusteringBins, 0.0);
  for (int v = 0; v < n; ++v) {
    const auto pairs = choose2(g.degree(v));
    const std::int64_t bin = pairs > 0 ? std::min<std::int64_t>(kClusteringBins * t[static_cast<std::size_t>(v)] / pairs,
                                                               kClusteringBins - 1)
                                       : 0;
    h.mass[static_cast<std::size_t>(bin)] += 1.0;
  }
  if (n > 0) {
    for (double& m : h.mass) m /= n;
  }
  return h;
}

std::vector<OrbitVector> orbit_counts(const Graph& g) {
  const int n = g.num_nodes();
  const auto N = static_cast<std::size_t>(n);
  std::vector<std::int64_t> deg(N);
  for (int v = 0; v < n; ++v) deg[static_cast<std::size_t>(v)] = g.degree(v);

  // Common-neighbor counts for every pair at distance <= 2.
  std::vector<std::int64_t> common(N * N, 0);
  for (int w = 0; w < n; ++w) {
    const auto& nw = g.neighbors(w);
    for (int u : nw) {
      for (int x : nw) {
        if (u != x) ++common[static_cast<std::size_t>(u) * N + static_cast<std::size_t>(x)];
      }
    }
  }
  auto cn = [&](int u, int x) { return common[static_cast<std::size_t>(u) * N + static_cast<std::size_t>(x)]; };
  const auto tri = triangles(g);

  std::vector<OrbitVector> out(N);
  for (int v = 0; v < n; ++v) {
    const auto dv = deg[static_cast<std::size_t>(v)];
    const auto tv = tri[static_cast<std::size_t>(v)];
    const auto& nv = g.neighbors(v);

    std::int64_t n4 = 0, n5 = 0, n6 = 0, n8 = 0, n9 = 0, n10 = 0, n12 = 0, n13 = 0, k4 = 0, sum_du = 0;
    for (int u : nv) {
      const auto du = deg[static_cast<std::size_t>(u)];
      sum_du += du - 1;
      n5 += (dv - 1) * (du - 1) - cn(u, v);
      n6 += choose2(du - 1);
      n9 += tri[static_cast<std::size_t>(u)] - cn(u, v);
      n13 += choose2(cn(u, v));
      for (int w : g.neighbors(u)) {
        if (w != v) n4 += deg[static_cast<std::size_t>(w)] - 1 - (g.has_edge(v, w) ? 1 : 0);
      }
    }
    for (std::size_t i = 0; i < nv.size(); ++i) {
      for (std::size_t j = i + 1; j < nv.size(); ++j) {
        const int u = nv[i], w = nv[j];
        if (!g.has_edge(u, w)) continue;
        n12 += cn(u, w) - 1;
        n10 += deg[static_cast<std::size_t>(u)] + deg[static_cast<std::size_t>(w)] - 4;
        for (std::size_t l = j + 1; l < nv.size(); ++l) {
          if (g.has_edge(u, nv[l]) && g.has_edge(w, nv[l])) ++k4;
        }
      }
    }
    for (int x = 0; x < n; ++x) {
      if (x != v) n8 += choose2(cn(v, x));
    }

    OrbitVector& o = out[static_cast<std::size_t>(v)];
    o[0] = dv;
    o[1] = sum_du - 2 * tv;
    o[2] = choose2(dv) - tv;
    o[3] = tv;
    o[14] = k4;
    o[13] = n13 - 3 * k4;
    o[12] = n12 - 3 * k4;
    o[11] = tv * (dv - 2) - 2 * o[13] - 3 * k4;
    o[10] = n10 - 2 * o[12] - 2 * o[13] - 6 * k4;
    o[9] = n9 - 2 * o[12] - 3 * k4;
    o[8] = n8 - o[12] - o[13] - 3 * k4;
    o[7] = choose3(dv) - o[11] - o[13] - k4;
    o[6] = n6 - o[9] - o[10] - 2 * o[12] - o[13] - 3 * k4;
    o[5] = n5 - 2 * o[8] - o[10] - 2 * o[11] - 2 * o[12] - 4 * o[13] - 6 * k4;
    o[4] = n4 - 2 * o[8] - 2 * o[9] - o[10] - 4 * o[12] - 2 * o[13] - 6 * k4;
  }
  return out;
}

namespace {

std::array<double, kOrbits> mean_orbits(const Graph& g) {
  std::array<double, kOrbits> mean{};
  const auto counts = orbit_counts(g);
  for (const auto& o : counts) {
    for (int i = 0; i < kOrbits; ++i) mean[static_cast<std::size_t>(i)] += static_cast<double>(o[static_cast<std::size_t>(i)]);
  }
  if (!counts.empty()) {
    for (double& x : mean) x /= static_cast<double>(counts.size());
  }
  return mean;
}

std::vector<std::array<double, kOrbits>> mean_orbits(const std::vector<Graph>& gs) {
  std::vector<std::array<double, kOrbits>> out(gs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < gs.size(); ++i) out[i] = mean_orbits(gs[i]);
  return out;
}

}  // namespace

std::pair<std::vector<StatHistogram>, std::vector<StatHistogram>> orbit_histograms(const std::vector<Graph>& a,
                                                                                    const std::vector<Graph>& b) {
  const auto ma = mean_orbits(a);
  const auto mb = mean_orbits(b);
  std::array<double, kOrbits> lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto* set : {&ma, &mb}) {
    for (const auto& m : *set) {
      for (std::size_t i = 0; i < kOrbits; ++i) {
        lo[i] = std::min(lo[i], m[i]);
        hi[i] = std::max(hi[i], m[i]);
      }
    }
  }
  auto scale = [&](const std::vector<std::array<double, kOrbits>>& ms) {
    std::vector<StatHistogram> hs;
    for (const auto& m : ms) {
      StatHistogram h;
      h.mass.resize(kOrbits);
      for (std::size_t i = 0; i < kOrbits; ++i) h.mass[i] = hi[i] > lo[i] ? (m[i] - lo[i]) / (hi[i] - lo[i]) : 0.0;
      hs.push_back(std::move(h));
    }
    return hs;
  };
  return {scale(ma), scale(mb)};
}

double wasserstein_1(const StatHistogram& a, const StatHistogram& b) {
  const std::size_t len = std::max(a.mass.size(), b.mass.size());
  double ca = 0.0, cb = 0.0, d = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    ca += i < a.mass.size() ? a.mass[i] : 0.0;
    cb += i < b.mass.size() ? b.mass[i] : 0.0;
    d += std::abs(ca - cb);
  }
  return d;
}

double gaussian_emd_kernel(const StatHistogram& a, const StatHistogram& b, double sigma) {
  const double d = wasserstein_1(a, b);
  return std::exp(-d * d / (2.0 * sigma * sigma));
}

std::vector<double> kernel_matrix(const std::vector<StatHistogram>& a, const std::vector<StatHistogram>& b,
                                  double sigma) {
  std::vector<double> k(a.size() * b.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) k[i * b.size() + j] = gaussian_emd_kernel(a[i], b[j], sigma);
  }
  return k;
}

std::vector<double> kernel_matrix_serial(const std::vector<StatHistogram>& a, const std::vector<StatHistogram>& b,
                                         double sigma) {
  std::vector<double> k;
  k.reserve(a.size() * b.size());
  for (const auto& x : a) {
    for (const auto& y : b) k.push_back(gaussian_emd_kernel(x, y, sigma));
  }
  return k;
}

double mmd(const std::vector<StatHistogram>& a, const std::vector<StatHistogram>& b, double sigma) {
  if (a.empty() || b.empty()) throw DataError("mmd: both sets must be non-empty");
  if (!(sigma > 0.0)) throw UsageError("mmd: sigma must be positive");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double kaa = sorted_sum(kernel_matrix(a, a, sigma)) / (na * na);
  const double kbb = sorted_sum(kernel_matrix(b, b, sigma)) / (nb * nb);
  const double kab = sorted_sum(kernel_matrix(a, b, sigma)) / (na * nb);
  // Grouped so that swapping the sets swaps only the first two terms.
  const double v = (std::min(kaa, kbb) + std::max(kaa, kbb)) - 2.0 * kab;
  return std::max(v, 0.0);
}

double emd_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DataError("emd_1d: both samples must be non-empty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double x = std::min(a.front(), b.front());
  double total = 0.0;
  while (i < a.size() || j < b.size()) {
    const double next = j == b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - x);
    x = next;
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
  }
  return total;
}

double modularity(const Graph& g, const std::vector<int>& part) {
  const double m2 = 2.0 * static_cast<double>(g.num_edges());
  if (m2 == 0.0) return 0.0;
  const int n = g.num_nodes();
  double q = 0.0;
  std::array<double, 2> deg_sum{0.0, 0.0};
  for (int v = 0; v < n; ++v) {
    const int pv = part[static_cast<std::size_t>(v)];
    deg_sum[static_cast<std::size_t>(pv)] += g.degree(v);
    for (int u : g.neighbors(v)) {
      if (part[static_cast<std::size_t>(u)] == pv) q += 1.0;
    }
  }
  q /= m2;
  for (double s : deg_sum) q -= (s / m2) * (s / m2);
  return q;
}

std::vector<int> modularity_bisection(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<int> part(static_cast<std::size_t>(n), 0);
  if (n < 2 || g.num_edges() == 0) return part;

  const double m2 = 2.0 * static_cast<double>(g.num_edges());
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) B(i, j) = (g.has_edge(i, j) ? 1.0 : 0.0) - g.degree(i) * static_cast<double>(g.degree(j)) / m2;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
  const Eigen::VectorXd lead = solver.eigenvectors().col(n - 1);
  // Fix the eigenvector sign so the split does not depend on the solver.
  double anchor = 0.0;
  for (int i = 0; i < n && anchor == 0.0; ++i) anchor = lead(i);
  for (int i = 0; i < n; ++i) part[static_cast<std::size_t>(i)] = (anchor >= 0.0 ? lead(i) : -lead(i)) > 0.0 ? 0 : 1;

  double best = modularity(g, part);
  for (int pass = 0; pass < n; ++pass) {
    int best_node = -1;
    double best_q = best;
    for (int v = 0; v < n; ++v) {
      part[static_cast<std::size_t>(v)] ^= 1;
      const double q = modularity(g, part);
      part[static_cast<std::size_t>(v)] ^= 1;
      if (q > best_q + 1e-12) {
        best_q = q;
        best_node = v;
      }
    }
    if (best_node < 0) break;
    part[static_cast<std::size_t>(best_node)] ^= 1;
    best = best_q;
  }
  return part;
}

namespace {

int common_attr_dim(const std::vector<Graph>& gs, const char* what) {
  int k = -1;
  for (const auto& g : gs) {
    if (k < 0) k = g.attr_dim();
    if (g.attr_dim() != k) throw DataError(std::string(what) + " set mixes attribute dimensions");
  }
  return std::max(k, 0);
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> node_values(const Graph& g, int v) {
  const auto a = g.attributes(v);
  return {a.begin(), a.end()};
}

}  // namespace

AttributeSamples attribute_samples(const std::vector<Graph>& generated, const std::vector<Graph>& test) {
  AttributeSamples s;
  bool labeled = true;
  for (const auto& g : test) {
    labeled = labeled && g.has_labels();
    for (int v = 0; v < g.num_nodes(); ++v) {
      for (double x : node_values(g, v)) {
        s.test_all.push_back(x);
        if (g.has_labels()) {
          const int c = g.community_labels()[static_cast<std::size_t>(v)];
          if (c == 0 || c == 1) s.test[static_cast<std::size_t>(c)].push_back(x);
        }
      }
    }
  }
  const std::array<double, 2> ref{mean_of(s.test[0]), mean_of(s.test[1])};

  for (const auto& g : generated) {
    std::vector<int> part;
    std::array<int, 2> to_com{0, 1};
    if (g.has_labels()) {
      part = g.community_labels();
    } else {
      part = modularity_bisection(g);
      std::array<std::vector<double>, 2> vals;
      for (int v = 0; v < g.num_nodes(); ++v) {
        for (double x : node_values(g, v)) vals[static_cast<std::size_t>(part[static_cast<std::size_t>(v)])].push_back(x);
      }
      if (vals[1].empty()) {
        const double m0 = mean_of(vals[0]);
        to_com[0] = std::abs(m0 - ref[0]) <= std::abs(m0 - ref[1]) ? 0 : 1;
      } else {
        const double m0 = mean_of(vals[0]), m1 = mean_of(vals[1]);
        const double keep = std::abs(m0 - ref[0]) + std::abs(m1 - ref[1]);
        const double swap = std::abs(m0 - ref[1]) + std::abs(m1 - ref[0]);
        if (swap < keep) to_com = {1, 0};
      }
    }
    for (int v = 0; v < g.num_nodes(); ++v) {
      const int p = part[static_cast<std::size_t>(v)];
      for (double x : node_values(g, v)) {
        s.generated_all.push_back(x);
        if (p == 0 || p == 1) s.generated[static_cast<std::size_t>(to_com[static_cast<std::size_t>(p)])].push_back(x);
      }
    }
  }
  if (!labeled) s.test = {};
  return s;
}

MmdReport evaluate(const std::vector<Graph>& generated, const std::vector<Graph>& test, double sigma) {
  if (generated.empty() || test.empty()) throw DataError("evaluate: both graph sets must be non-empty");
  if (!(sigma > 0.0)) throw UsageError("evaluate: sigma must be positive");
  const int kg = common_attr_dim(generated, "generated");
  const int kt = common_attr_dim(test, "test");
  if ((kg > 0) != (kt > 0)) throw DataError("evaluate: attributes present in only one of the two sets");
  if (kg != kt) throw DataError("evaluate: attribute dimensions differ (" + std::to_string(kg) + " vs " + std::to_string(kt) + ")");

  MmdReport r;
  r.sigma = sigma;
  r.generated_count = generated.size();
  r.test_count = test.size();

  auto per_graph = [](const std::vector<Graph>& gs, StatHistogram (*f)(const Graph&)) {
    std::vector<StatHistogram> hs(gs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < gs.size(); ++i) hs[i] = f(gs[i]);
    return hs;
  };
  r.degree_mmd = mmd(per_graph(generated, degree_histogram), per_graph(test, degree_histogram), sigma);
  r.clustering_mmd = mmd(per_graph(generated, clustering_histogram), per_graph(test, clustering_histogram), sigma);
  const auto [og, ot] = orbit_histograms(generated, test);
  r.orbit_mmd = mmd(og, ot, sigma);

  if (kg > 0) {
    auto s = attribute_samples(generated, test);
    r.emd_all = emd_1d(s.generated_all, s.test_all);
    if (!s.test[0].empty() && !s.test[1].empty()) {
      // A community no generated node was assigned to is compared as empty
      // mass: fall back to the pooled generated sample.
      r.emd_com1 = emd_1d(s.generated[0].empty() ? s.generated_all : s.generated[0], s.test[0]);
      r.emd_com2 = emd_1d(s.generated[1].empty() ? s.generated_all : s.generated[1], s.test[1]);
    }
    r.samples = std::move(s);
  }
  return r;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string fmt(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 6);
  return ec == std::errc{} ? std::string(buf.data(), end) : "nan";
}

}  // namespace

nlohmann::json MmdReport::to_json() const {
  return {{"degree_mmd", degree_mmd},
          {"clustering_mmd", clustering_mmd},
          {"orbit_mmd", orbit_mmd},
          {"emd_all", opt_json(emd_all)},
          {"emd_com1", opt_json(emd_com1)},
          {"emd_com2", opt_json(emd_com2)},
          {"generated_count", generated_count},
          {"test_count", test_count},
          {"sigma", sigma},
          {"orbit_statistic", "mean per-node orbit counts, min-max scaled per orbit over both sets"},
          {"provenance", provenance}};
}

std::string MmdReport::to_text() const {
  std::ostringstream os;
  os << "generated graphs  " << generated_count << "\n"
     << "test graphs       " << test_count << "\n"
     << "kernel sigma      " << fmt(sigma) << "\n"
     << "degree MMD        " << fmt(degree_mmd) << "\n"
     << "clustering MMD    " << fmt(clustering_mmd) << "\n"
     << "orbit MMD         " << fmt(orbit_mmd) << "\n";
  if (emd_all) {
    os << "EMD com1          " << (emd_com1 ? fmt(*emd_com1) : "n/a") << "\n"
       << "EMD com2          " << (emd_com2 ? fmt(*emd_com2) : "n/a") << "\n"
       << "EMD all           " << fmt(*emd_all) << "\n";
  }
  return os.str();
}

void write_density_tsv(const AttributeSamples& s, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << "source\tcommunity\tvalue\n";
  auto put = [&](const char* src, const char* com, const std::vector<double>& v) {
    for (double x : v) f << src << '\t' << com << '\t' << fmt(x) << '\n';
  };
  put("generated", "1", s.generated[0]);
  put("generated", "2", s.generated[1]);
  put("generated", "all", s.generated_all);
  put("test", "1", s.test[0]);
  put("test", "2", s.test[1]);
  put("test", "all", s.test_all);
}

}  // namespace gvrnn::eval
