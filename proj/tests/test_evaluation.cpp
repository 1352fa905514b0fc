#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gvrnn/error.hpp"
#include "gvrnn/evaluation.hpp"
#include "gvrnn/synthdata.hpp"

using namespace gvrnn;
using namespace gvrnn::eval;

namespace {

Graph random_graph(int n, double p, Rng& rng) {
  Graph g(n);
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) g.add_edge(u, v);
    }
  }
  return g;
}

// Enumerates every 3- and 4-subset, classifies the induced subgraph and
// credits each node with its orbit.
std::vector<OrbitVector> brute_orbits(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<OrbitVector> out(static_cast<std::size_t>(n));
  for (auto& o : out) o.fill(0);
  for (int v = 0; v < n; ++v) out[static_cast<std::size_t>(v)][0] = g.degree(v);
  auto credit = [&](const std::vector<int>& s) {
    const int k = static_cast<int>(s.size());
    std::vector<int> deg(static_cast<std::size_t>(k), 0);
    int edges = 0;
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        if (g.has_edge(s[i], s[j])) {
          ++deg[i];
          ++deg[j];
          ++edges;
        }
      }
    }
    if (std::count(deg.begin(), deg.end(), 0) > 0) return;
    const int maxd = *std::max_element(deg.begin(), deg.end());
    for (int i = 0; i < k; ++i) {
      int orbit = -1;
      const int d = deg[i];
      if (k == 3) {
        orbit = edges == 3 ? 3 : (d == 1 ? 1 : 2);
      } else if (edges == 3) {
        if (maxd == 3) orbit = d == 1 ? 6 : 7;
        else orbit = d == 1 ? 4 : 5;
      } else if (edges == 4) {
        if (maxd == 2) orbit = 8;
        else orbit = d == 1 ? 9 : (d == 2 ? 10 : 11);
      } else if (edges == 5) {
        orbit = d == 2 ? 12 : 13;
      } else if (edges == 6) {
        orbit = 14;
      } else {
        return;  // disconnected despite positive degrees (two disjoint edges)
      }
      ++out[static_cast<std::size_t>(s[i])][static_cast<std::size_t>(orbit)];
    }
  };
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        credit({a, b, c});
        for (int d = c + 1; d < n; ++d) credit({a, b, c, d});
      }
    }
  }
  return out;
}

// Optimal 1-D transport between two histograms by moving mass in order.
double transport_oracle(std::vector<double> a, std::vector<double> b) {
  const std::size_t len = std::max(a.size(), b.size());
  a.resize(len, 0.0);
  b.resize(len, 0.0);
  double cost = 0.0;
  std::size_t i = 0, j = 0;
  while (i < len && j < len) {
    const double moved = std::min(a[i], b[j]);
    cost += moved * std::abs(static_cast<double>(i) - static_cast<double>(j));
    a[i] -= moved;
    b[j] -= moved;
    if (a[i] <= 1e-15) ++i;
    if (b[j] <= 1e-15) ++j;
  }
  return cost;
}

StatHistogram random_hist(int len, Rng& rng) {
  StatHistogram h;
  double total = 0.0;
  for (int i = 0; i < len; ++i) {
    h.mass.push_back(rng.bernoulli(0.5) ? rng.uniform() : 0.0);
    total += h.mass.back();
  }
  if (total == 0.0) h.mass[0] = total = 1.0;
  for (double& m : h.mass) m /= total;
  return h;
}

double naive_mmd(const std::vector<StatHistogram>& a, const std::vector<StatHistogram>& b, double sigma) {
  auto mean_k = [&](const auto& x, const auto& y) {
    double s = 0.0;
    for (const auto& p : x) {
      for (const auto& q : y) s += gaussian_emd_kernel(p, q, sigma);
    }
    return s / static_cast<double>(x.size() * y.size());
  };
  return mean_k(a, a) + mean_k(b, b) - 2.0 * mean_k(a, b);
}

const Graph kTriangle(3, std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}});
const Graph kPath3(3, std::vector<Edge>{{0, 1}, {1, 2}});
const Graph kDiamond(4, std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}});

}  // namespace

TEST_CASE("orbit counts match exhaustive enumeration") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(1, 30);
    const Graph g = random_graph(n, rng.uniform() * 0.6, rng);
    const auto fast = orbit_counts(g);
    const auto slow = brute_orbits(g);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t v = 0; v < fast.size(); ++v) {
      for (std::size_t o = 0; o < kOrbits; ++o) {
        INFO("trial " << trial << " node " << v << " orbit " << o);
        CHECK(fast[v][o] == slow[v][o]);
      }
    }
  }
}

TEST_CASE("orbit counts on small named graphs") {
  const Graph k4(4, std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  for (const auto& o : orbit_counts(k4)) {
    CHECK(o[0] == 3);
    CHECK(o[3] == 3);
    CHECK(o[14] == 1);
    CHECK(o[13] == 0);
  }
  const auto d = orbit_counts(kDiamond);
  CHECK(d[0][12] == 1);
  CHECK(d[1][13] == 1);
  CHECK(d[3][12] == 1);
  const Graph c4(4, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  for (const auto& o : orbit_counts(c4)) CHECK(o[8] == 1);
}

TEST_CASE("degree histogram") {
  const auto h = degree_histogram(kPath3);
  REQUIRE(h.mass.size() == 3);
  CHECK(h.mass[0] == 0.0);
  CHECK(h.mass[1] == doctest::Approx(2.0 / 3.0));
  CHECK(h.mass[2] == doctest::Approx(1.0 / 3.0));
  CHECK(degree_histogram(Graph(1)).mass == std::vector<double>{1.0});
}

TEST_CASE("clustering histogram") {
  const auto tri = clustering_histogram(kTriangle);
  CHECK(tri.mass.size() == 100);
  CHECK(tri.mass[99] == 1.0);
  CHECK(clustering_histogram(kPath3).mass[0] == 1.0);
  const auto d = clustering_histogram(kDiamond);
  CHECK(d.mass[66] == 0.5);
  CHECK(d.mass[99] == 0.5);
  const auto c = clustering_coefficients(kDiamond);
  CHECK(c[1] == doctest::Approx(2.0 / 3.0));
  CHECK(c[0] == 1.0);
}

TEST_CASE("W1 equals the transport oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_hist(rng.uniform_int(1, 12), rng);
    const auto b = random_hist(rng.uniform_int(1, 12), rng);
    CHECK(wasserstein_1(a, b) == doctest::Approx(transport_oracle(a.mass, b.mass)).epsilon(1e-9));
  }
  CHECK(wasserstein_1(StatHistogram{{1.0}}, StatHistogram{{0.0, 0.0, 1.0}}) == 2.0);
}

TEST_CASE("gaussian EMD kernel closed form") {
  const StatHistogram a{{1.0}}, b{{0.0, 0.0, 1.0}};
  CHECK(gaussian_emd_kernel(a, b, 1.0) == doctest::Approx(std::exp(-2.0)));
  CHECK(gaussian_emd_kernel(a, b, 2.0) == doctest::Approx(std::exp(-0.5)));
  CHECK(gaussian_emd_kernel(a, a, 1.0) == 1.0);
}

TEST_CASE("mmd properties") {
  Rng rng(8);
  std::vector<StatHistogram> a, b;
  for (int i = 0; i < 15; ++i) a.push_back(random_hist(8, rng));
  for (int i = 0; i < 11; ++i) b.push_back(random_hist(10, rng));
  CHECK(mmd(a, a, 1.0) == 0.0);
  CHECK(mmd(a, b, 1.0) == mmd(b, a, 1.0));
  CHECK(mmd(a, b, 1.0) == doctest::Approx(naive_mmd(a, b, 1.0)).epsilon(1e-10));
  CHECK(mmd(a, b, 1.0) >= 0.0);

  const StatHistogram x{{1.0}}, y{{0.0, 1.0}};
  CHECK(mmd({x}, {y}, 1.0) == doctest::Approx(2.0 - 2.0 * std::exp(-0.5)));

  CHECK(kernel_matrix(a, b, 1.0) == kernel_matrix_serial(a, b, 1.0));
}

TEST_CASE("emd_1d") {
  CHECK(emd_1d({0.0, 1.0}, {0.0, 1.0}) == 0.0);
  CHECK(emd_1d({0.0}, {3.0}) == 3.0);
  CHECK(emd_1d({0.0, 2.0}, {1.0}) == doctest::Approx(1.0));
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a, b, c;
    for (int i = 0; i < 40; ++i) {
      a.push_back(rng.normal());
      b.push_back(rng.normal() + 1.0);
      c.push_back(2.0 * rng.normal());
    }
    // equal sizes: matching sorted samples is optimal
    auto sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    double oracle = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) oracle += std::abs(sa[i] - sb[i]);
    oracle /= static_cast<double>(sa.size());
    CHECK(emd_1d(a, b) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(emd_1d(a, b) == doctest::Approx(emd_1d(b, a)).epsilon(1e-12));
    CHECK(emd_1d(a, c) <= emd_1d(a, b) + emd_1d(b, c) + 1e-12);
    std::vector<double> a3;
    for (int r = 0; r < 3; ++r) a3.insert(a3.end(), a.begin(), a.end());
    CHECK(emd_1d(a, a3) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("modularity bisection separates two cliques") {
  Graph g(8);
  for (int c = 0; c < 2; ++c) {
    for (int u = 0; u < 4; ++u) {
      for (int v = u + 1; v < 4; ++v) g.add_edge(4 * c + u, 4 * c + v);
    }
  }
  g.add_edge(3, 4);
  const auto part = modularity_bisection(g);
  for (int v = 1; v < 4; ++v) CHECK(part[v] == part[0]);
  for (int v = 5; v < 8; ++v) CHECK(part[v] == part[4]);
  CHECK(part[0] != part[4]);

  const Graph two_triangles(6, std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}});
  CHECK(modularity(two_triangles, {0, 0, 0, 1, 1, 1}) == doctest::Approx(6.0 / 7.0 - 0.5));
}

TEST_CASE("degree MMD separates dataset families") {
  const auto a = synth::gen_dataset(synth::DatasetKind::com_small, 60, 1);
  const auto b = synth::gen_dataset(synth::DatasetKind::com_small, 60, 2);
  const auto e = synth::gen_dataset(synth::DatasetKind::ego_surrogate, 60, 1);
  const auto same = evaluate(a, b);
  const auto diff = evaluate(a, e);
  CHECK(same.degree_mmd < diff.degree_mmd);
  CHECK(same.clustering_mmd < diff.clustering_mmd);
}

TEST_CASE("a set against itself scores zero") {
  const auto t = synth::gen_dataset(synth::DatasetKind::com_attr, 20, 4, synth::DatasetOptions{15, 20});
  const auto r = evaluate(t, t);
  CHECK(r.degree_mmd == 0.0);
  CHECK(r.clustering_mmd == 0.0);
  CHECK(r.orbit_mmd == 0.0);
  REQUIRE(r.emd_all);
  CHECK(*r.emd_all == 0.0);
  CHECK(*r.emd_com1 == 0.0);
  CHECK(*r.emd_com2 == 0.0);
}

TEST_CASE("orbit histograms are scaled into the unit interval") {
  const auto a = synth::gen_dataset(synth::DatasetKind::com_small, 10, 1);
  const auto e = synth::gen_dataset(synth::DatasetKind::ego_surrogate, 10, 1);
  const auto [ha, he] = orbit_histograms(a, e);
  for (const auto* set : {&ha, &he}) {
    for (const auto& h : *set) {
      CHECK(h.mass.size() == kOrbits);
      for (double m : h.mass) {
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
      }
    }
  }
}

TEST_CASE("attribute samples follow community labels") {
  const auto t = synth::gen_dataset(synth::DatasetKind::com_attr, 10, 6, synth::DatasetOptions{15, 20});
  auto unlabeled = t;
  for (auto& g : unlabeled) g.set_community_labels({});
  const auto s = attribute_samples(unlabeled, t);
  std::size_t total = 0;
  for (const auto& g : t) total += static_cast<std::size_t>(g.num_nodes());
  CHECK(s.test_all.size() == total);
  CHECK(s.generated_all.size() == total);
  CHECK(s.generated[0].size() + s.generated[1].size() == total);
  auto mean = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return m / static_cast<double>(v.size());
  };
  // the bisection recovers the planted split well enough to order the means
  CHECK((mean(s.generated[0]) < mean(s.generated[1])) == (mean(s.test[0]) < mean(s.test[1])));
}

TEST_CASE("attribute dimension mismatch is a data error") {
  const auto t = synth::gen_dataset(synth::DatasetKind::com_attr, 4, 6, synth::DatasetOptions{15, 20});
  const auto plain = synth::gen_dataset(synth::DatasetKind::com_small, 4, 6);
  CHECK_THROWS_AS(evaluate(plain, t), DataError);
}

TEST_CASE("report serialization") {
  const auto t = synth::gen_dataset(synth::DatasetKind::com_attr, 6, 6, synth::DatasetOptions{15, 20});
  const auto r = evaluate(t, t);
  const auto j = r.to_json();
  CHECK(j["degree_mmd"] == 0.0);
  CHECK(j.contains("emd_com1"));
  CHECK(r.to_text().find("degree") != std::string::npos);
}
