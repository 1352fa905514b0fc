#include <doctest.h>

#include <cmath>
#include <set>

#include "gvrnn/error.hpp"
#include "gvrnn/synthdata.hpp"

using namespace gvrnn;
using namespace gvrnn::synth;

TEST_CASE("fully connected spec gives K4") {
  CommunitySpec spec{{2, 2}, {1.0, 1.0}, 1.0, {}};
  Rng rng(1);
  const Graph g = gen_community_graph(spec, rng);
  CHECK(g.num_edges() == 6);
  CHECK(g.community_labels() == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("invalid specs are rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(gen_community_graph(CommunitySpec{{2, 2}, {1.2, 0.5}, 0.1, {}}, rng), DataError);
  CHECK_THROWS_AS(gen_community_graph(CommunitySpec{{2, 0}, {0.5, 0.5}, 0.1, {}}, rng), DataError);
  CHECK_THROWS_AS(gen_community_graph(CommunitySpec{{2, 2}, {0.5}, 0.1, {}}, rng), DataError);
  CHECK_THROWS_AS(gen_community_graph(CommunitySpec{{2, 2}, {0.5, 0.5}, 0.1, {{0.0, 1.0}}}, rng), DataError);
}

TEST_CASE("exhausted retry budget names the spec") {
  Rng rng(1);
  try {
    gen_community_graph(CommunitySpec{{3, 3}, {0.0, 0.0}, 0.0, {}}, rng, 5);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("sizes=[3,3]") != std::string::npos);
  }
}

TEST_CASE("edge counts match the connectivity-conditioned expectation") {
  const CommunitySpec spec{{10, 10}, {0.7, 0.7}, 0.05, {}};
  Rng rng(17);
  double intra = 0.0, inter = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const Graph g = gen_community_graph(spec, rng);
    for (const auto& [u, v] : g.edges()) ((u < 10) == (v < 10) ? intra : inter) += 1.0;
  }
  intra /= draws;
  inter /= draws;
  // A connected sample needs at least one cross edge; intra-community
  // disconnection at p = 0.7 is negligible.
  const double inter_expected = 100 * 0.05 / (1.0 - std::pow(0.95, 100));
  CHECK(std::abs(intra - 63.0) / 63.0 < 0.02);
  CHECK(std::abs(inter - inter_expected) / inter_expected < 0.02);
}

TEST_CASE("attribute means converge to the community means") {
  const CommunitySpec spec{{30, 30}, {0.3, 0.3}, 0.05, {{1.5, 0.75}, {-0.5, 1.0}}};
  Rng rng(3);
  double sum[2] = {0, 0};
  double count[2] = {0, 0};
  while (count[0] < 1e5) {
    const Graph g = gen_community_graph(spec, rng);
    for (int v = 0; v < g.num_nodes(); ++v) {
      const int c = g.community_labels()[static_cast<std::size_t>(v)];
      sum[c] += g.attributes(v)[0];
      count[c] += 1;
    }
  }
  CHECK(std::abs(sum[0] / count[0] - 1.5) < 3 * 0.75 / std::sqrt(count[0]));
  CHECK(std::abs(sum[1] / count[1] + 0.5) < 3 * 1.0 / std::sqrt(count[1]));
}

TEST_CASE("within-community mean degree") {
  const CommunitySpec spec{{8, 8}, {0.5, 0.5}, 0.1, {}};
  Rng rng(5);
  double deg = 0.0, nodes = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const Graph g = gen_community_graph(spec, rng);
    for (int v = 0; v < g.num_nodes(); ++v) deg += g.degree(v);
    nodes += g.num_nodes();
  }
  const double expected = 7 * 0.5 + 8 * 0.1;
  CHECK(std::abs(deg / nodes - expected) / expected < 0.03);
}

TEST_CASE("dataset node ranges") {
  SUBCASE("com-small") {
    const auto gs = gen_dataset(DatasetKind::com_small, 500, 1);
    CHECK(gs.size() == 500);
    std::set<int> sizes;
    for (const auto& g : gs) {
      CHECK(g.num_nodes() >= 12);
      CHECK(g.num_nodes() <= 20);
      CHECK(g.is_connected());
      sizes.insert(g.num_nodes());
      const auto& lab = g.community_labels();
      const auto ones = std::count(lab.begin(), lab.end(), 1);
      CHECK(ones == g.num_nodes() / 2);
    }
    CHECK(sizes.size() == 9);
  }
  SUBCASE("com-attr carries one attribute per node") {
    for (const auto& g : gen_dataset(DatasetKind::com_attr, 20, 2)) {
      CHECK(g.num_nodes() >= 30);
      CHECK(g.num_nodes() <= 60);
      CHECK(g.attr_dim() == 1);
    }
  }
  SUBCASE("reduced com-attr") {
    DatasetOptions opts;
    opts.min_nodes = 15;
    opts.max_nodes = 30;
    for (const auto& g : gen_dataset(DatasetKind::com_attr, 50, 2, opts)) CHECK(g.num_nodes() <= 30);
  }
  SUBCASE("ego surrogate has a hub") {
    for (const auto& g : gen_dataset(DatasetKind::ego_surrogate, 200, 3)) {
      CHECK(g.num_nodes() >= 4);
      CHECK(g.num_nodes() <= 18);
      int max_deg = 0;
      for (int v = 0; v < g.num_nodes(); ++v) max_deg = std::max(max_deg, g.degree(v));
      CHECK(max_deg == g.num_nodes() - 1);
    }
  }
}

TEST_CASE("com-mix draws both types about equally") {
  Rng rng(9);
  int type_a = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    if (sample_community_spec(DatasetKind::com_mix, rng).p_intra[1] == 0.3) ++type_a;
  }
  CHECK(std::abs(type_a / double(draws) - 0.5) < 3 * 0.5 / std::sqrt(draws));
}

TEST_CASE("dataset generation does not depend on threading") {
  const auto a = gen_dataset(DatasetKind::com_mix, 40, 12);
  const auto b = gen_dataset_serial(DatasetKind::com_mix, 40, 12);
  CHECK(a == b);
  CHECK(gen_dataset_graph(DatasetKind::com_mix, 12, 17) == a[17]);
}

TEST_CASE("unknown dataset name") {
  CHECK_THROWS_AS(parse_dataset_kind("ego-small"), UsageError);
  CHECK(parse_dataset_kind("com-attr") == DatasetKind::com_attr);
}

TEST_CASE("split sizes") {
  const auto gs = gen_dataset(DatasetKind::com_small, 500, 4);
  Rng rng(1), again(1);
  const auto s = split_dataset(gs, 0.8, rng);
  CHECK(s.train.size() == 400);
  CHECK(s.test.size() == 100);
  const auto t = split_dataset(gs, 0.8, again);
  CHECK(s.train == t.train);

  const std::vector<Graph> ten(gs.begin(), gs.begin() + 10);
  const auto u = split_dataset(ten, 0.8, rng);
  CHECK(u.train.size() == 8);
  CHECK(u.test.size() == 2);
  std::multiset<std::uint64_t> in, out;
  // Compare as multisets of edge counts plus sizes; graphs are distinct objects.
  for (const auto& g : ten) in.insert(g.num_edges() * 100 + static_cast<std::uint64_t>(g.num_nodes()));
  for (const auto* part : {&u.train, &u.test}) {
    for (const auto& g : *part) out.insert(g.num_edges() * 100 + static_cast<std::uint64_t>(g.num_nodes()));
  }
  CHECK(in == out);
  CHECK_THROWS_AS(split_dataset(std::vector<Graph>(1, Graph(1)), 0.8, rng), DataError);
  CHECK_THROWS_AS(split_dataset(ten, 1.0, rng), UsageError);
}

TEST_CASE("manifest records generator parameters") {
  const auto m = dataset_manifest(DatasetKind::com_attr, 200, 7, DatasetOptions{15, 30});
  CHECK(m["generator"] == "com-attr");
  CHECK(m["seed"] == 7);
  CHECK(m["params"]["max_nodes"] == 30);
  CHECK(m["params"]["attributes"][0]["mean"] == 1.5);
  CHECK(dataset_manifest(DatasetKind::ego_surrogate, 10, 1)["surrogate"] == true);
}
