// Acceptance runner. `acceptance <n>` checks criterion n (1-10) and prints
// one line: "criterion <n> PASS|FAIL <details>". With no argument every
// criterion runs in order. Exit status is 0 only when all requested pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "gvrnn/diagnostics.hpp"
#include "gvrnn/evaluation.hpp"
#include "gvrnn/generation.hpp"
#include "gvrnn/graph.hpp"
#include "gvrnn/model.hpp"
#include "gvrnn/nn/checkpoint.hpp"
#include "gvrnn/nn/layers.hpp"
#include "gvrnn/nn/tape.hpp"
#include "gvrnn/synthdata.hpp"
#include "gvrnn/training.hpp"

using namespace gvrnn;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string details;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const fs::path kRunRoot = fs::path(GVRNN_ACCEPTANCE_DIR);

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

synth::Split dataset_split(synth::DatasetKind kind, int count, std::uint64_t seed, const synth::DatasetOptions& opts = {}) {
  const auto graphs = synth::gen_dataset(kind, count, seed, opts);
  Rng rng(derive_seed(seed, 2));
  return synth::split_dataset(graphs, 0.8, rng);
}

// Trains with the desk defaults, samples `count` graphs and scores them.
eval::MmdReport train_and_score(train::TrainConfig cfg, const synth::Split& split, int count, const fs::path& dir,
                                double* minutes) {
  const auto t0 = Clock::now();
  auto progress = [&](const train::MetricsRow& r) {
    if (r.step % 1000 == 0) std::cerr << "  " << dir.filename().string() << " step " << r.step << " total " << fmt(r.total) << "\n";
  };
  cfg.log_every = 100;
  auto result = train::train_run(cfg, split.train, dir, progress);
  if (minutes) *minutes = seconds_since(t0) / 60.0;
  const auto model = gen::load_model(result.final_checkpoint);
  gen::GenerationSpec spec;
  spec.count = count;
  spec.seed = cfg.seed;
  return eval::evaluate(gen::generate_set(model, spec), split.test);
}

bool relabeled_equal(const Graph& decoded, const Graph& g, const std::vector<int>& order) {
  return decoded.edges() == relabel(g, order).edges();
}

Graph random_graph(int n, double p, Rng& rng) {
  Graph g(n);
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) g.add_edge(u, v);
    }
  }
  return g;
}

std::vector<eval::OrbitVector> brute_orbits(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<eval::OrbitVector> out(static_cast<std::size_t>(n));
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
    for (int d : deg) {
      if (d == 0) return;
    }
    if (k == 4 && edges == 2) return;
    int maxd = 0;
    for (int d : deg) maxd = std::max(maxd, d);
    for (int i = 0; i < k; ++i) {
      const int d = deg[i];
      int orbit;
      if (k == 3) orbit = edges == 3 ? 3 : (d == 1 ? 1 : 2);
      else if (edges == 3) orbit = maxd == 3 ? (d == 1 ? 6 : 7) : (d == 1 ? 4 : 5);
      else if (edges == 4) orbit = maxd == 2 ? 8 : (d == 1 ? 9 : (d == 2 ? 10 : 11));
      else if (edges == 5) orbit = d == 2 ? 12 : 13;
      else orbit = 14;
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

double log_density(const nn::GaussianParams& g, const nn::Vector& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x(i) - g.mean(i);
    s += -0.5 * (std::log(2.0 * M_PI) + g.logvar(i) + d * d * std::exp(-g.logvar(i)));
  }
  return s;
}

// ------------------------------------------------------------------ criteria

Verdict codec_round_trip() {
  const auto t0 = Clock::now();
  auto graphs = synth::gen_dataset(synth::DatasetKind::com_mix, 500, 101);
  const auto more = synth::gen_dataset(synth::DatasetKind::com_small, 500, 102);
  graphs.insert(graphs.end(), more.begin(), more.end());
  Rng rng(7);
  int ok = 0;
  for (const auto& g : graphs) {
    if (!g.is_connected()) continue;
    const auto order = bfs_order(g, rng);
    const auto seq = encode_sequence(g, order, std::max(1, required_bandwidth(g, order)));
    ok += relabeled_equal(decode_graph(seq), g, order);
  }
  const double secs = seconds_since(t0);
  return {ok == 1000 && secs < 10.0, std::to_string(ok) + "/1000 exact, " + fmt(secs) + " s (limit 10 s)"};
}

Verdict orbit_oracle() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  int ok = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Graph g = random_graph(rng.uniform_int(1, 30), rng.uniform() * 0.6, rng);
    ok += eval::orbit_counts(g) == brute_orbits(g);
  }
  const double secs = seconds_since(t0);
  return {ok == 200 && secs < 60.0, std::to_string(ok) + "/200 graphs exact, " + fmt(secs) + " s (limit 60 s)"};
}

Verdict kl_monte_carlo() {
  Rng rng(31);
  constexpr int kDim = 64;
  constexpr int kSamples = 1000000;
  double worst = 0.0;
  bool self_zero = true;
  for (int pair = 0; pair < 20; ++pair) {
    auto draw = [&] {
      nn::GaussianParams g{nn::Vector(kDim), nn::Vector(kDim)};
      for (int i = 0; i < kDim; ++i) {
        g.mean(i) = rng.normal();
        g.logvar(i) = rng.uniform() * 2.0 - 1.0;
      }
      return g;
    };
    const auto q = draw();
    const auto p = draw();
    const double closed = nn::kl_diag_gaussians(q, p);
    double mc = 0.0;
    nn::Vector x(kDim);
    for (int s = 0; s < kSamples; ++s) {
      for (int i = 0; i < kDim; ++i) x(i) = q.mean(i) + std::exp(0.5 * q.logvar(i)) * rng.normal();
      mc += log_density(q, x) - log_density(p, x);
    }
    mc /= kSamples;
    worst = std::max(worst, std::abs(mc - closed) / std::abs(closed));
    self_zero = self_zero && nn::kl_diag_gaussians(q, q) == 0.0;
  }
  return {worst < 0.01 && self_zero,
          "max relative error " + fmt(worst) + " over 20 pairs (limit 0.01), KL(q,q)==0 " + (self_zero ? "yes" : "no")};
}

Verdict gradient_integrity() {
  bool pass = true;
  std::string details;
  for (auto v : {model::Variant::graphvrnn, model::Variant::graphvrnn_nlp, model::Variant::graphrnn}) {
    nn::GradCheckOptions opts;
    opts.probes = 200;
    opts.step = 1e-4;
    const auto r = diag::check_variant_gradients(v, 17, opts);
    pass = pass && r.probes >= 200 && r.max_rel_error < 1e-3;
    details += model::to_string(v) + " " + fmt(r.max_rel_error) + " (" + std::to_string(r.probes) + " probes) ";
  }
  return {pass, details + "limit 1e-3"};
}

Verdict mmd_sanity() {
  double worst_self = 0.0;
  for (auto kind : {synth::DatasetKind::com_small, synth::DatasetKind::com_mix, synth::DatasetKind::ego_surrogate}) {
    const auto s = synth::gen_dataset(kind, 100, 5);
    const auto r = eval::evaluate(s, s);
    worst_self = std::max({worst_self, r.degree_mmd, r.clustering_mmd, r.orbit_mmd});
  }
  bool pass = worst_self <= 1e-9;
  std::string details = "self mmd max " + fmt(worst_self) + "; ratios";
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto a = synth::gen_dataset(synth::DatasetKind::com_small, 100, derive_seed(seed, 10));
    const auto b = synth::gen_dataset(synth::DatasetKind::com_small, 100, derive_seed(seed, 11));
    const auto e = synth::gen_dataset(synth::DatasetKind::ego_surrogate, 100, derive_seed(seed, 12));
    auto degree = [](const std::vector<Graph>& gs) {
      std::vector<eval::StatHistogram> h;
      for (const auto& g : gs) h.push_back(eval::degree_histogram(g));
      return h;
    };
    const double same = eval::mmd(degree(a), degree(b), 1.0);
    const double diff = eval::mmd(degree(a), degree(e), 1.0);
    pass = pass && 3.0 * same <= diff;
    details += " " + fmt(diff / same);
  }
  return {pass, details + " (need >= 3)"};
}

Verdict desk_structure() {
  double sum = 0.0, slowest = 0.0;
  std::string per;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto split = dataset_split(synth::DatasetKind::com_small, 500, seed);
    train::TrainConfig cfg;
    cfg.seed = seed;
    double minutes = 0.0;
    const auto r = train_and_score(cfg, split, 100, kRunRoot / ("c6_seed" + std::to_string(seed)), &minutes);
    sum += r.degree_mmd;
    slowest = std::max(slowest, minutes);
    per += " " + fmt(r.degree_mmd);
  }
  const double mean = sum / 3.0;
  return {mean < 0.15 && slowest <= 60.0,
          "degree MMD mean " + fmt(mean) + " (limit 0.15), per seed" + per + ", slowest run " + fmt(slowest) + " min"};
}

Verdict attribute_ordering() {
  int wins = 0;
  std::string per;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto split = dataset_split(synth::DatasetKind::com_attr, 200, seed, synth::DatasetOptions{15, 30});
    train::TrainConfig vrnn;
    vrnn.seed = seed;
    vrnn.model.beta = 0.5;
    train::TrainConfig rnn;
    rnn.seed = seed;
    rnn.model.variant = model::Variant::graphrnn;
    const auto a = train_and_score(vrnn, split, 100, kRunRoot / ("c7_vrnn_seed" + std::to_string(seed)), nullptr);
    const auto b = train_and_score(rnn, split, 100, kRunRoot / ("c7_rnn_seed" + std::to_string(seed)), nullptr);
    wins += *a.emd_all < *b.emd_all;
    per += " " + fmt(*a.emd_all) + " vs " + fmt(*b.emd_all) + ";";
  }
  return {wins >= 2, "graphvrnn(beta 0.5) vs graphrnn emd_all:" + per + " wins " + std::to_string(wins) + "/3 (need 2)"};
}

Verdict variant_contract() {
  const auto prob = diag::tiny_problem(model::Variant::graphvrnn_nlp, 23);
  nn::Tape t(false);
  Rng rng(4);
  const auto batch = model::make_batch(prob.batch, prob.config);
  model::ForwardOptions opts;
  opts.collect_outputs = true;
  const auto fwd = model::forward_teacher_forced(t, prob.params, prob.config, batch, rng, opts);
  const auto loss = model::elbo_loss(t, fwd, prob.config, prob.config.beta);
  const nn::GaussianParams standard{nn::Vector::Zero(prob.config.d_z), nn::Vector::Zero(prob.config.d_z)};
  double sum = 0.0;
  int steps = 0;
  for (const auto& seq : fwd.outputs) {
    for (const auto& so : seq) {
      sum += nn::kl_diag_gaussians(*so.q_params, standard);
      ++steps;
    }
  }
  // kl_term is normalized per active step, like the reconstruction terms
  const double expected = sum / steps;
  const double err = std::abs(loss.kl - expected);

  const auto rnn = diag::tiny_problem(model::Variant::graphrnn, 23);
  nn::Tape t2(false);
  Rng rng2(4);
  const auto fwd2 = model::forward_teacher_forced(t2, rnn.params, rnn.config, model::make_batch(rnn.batch, rnn.config), rng2);
  const auto loss2 = model::elbo_loss(t2, fwd2, rnn.config, rnn.config.beta);
  bool no_latent_params = true;
  for (const auto& [name, p] : rnn.params.entries()) {
    if (name.rfind("posterior.", 0) == 0 || name.rfind("prior.", 0) == 0) no_latent_params = false;
  }
  return {err <= 1e-12 && loss2.kl == 0.0 && no_latent_params,
          "nlp |kl - sum KL(q||N(0,I))/steps| = " + fmt(err) + " (limit 1e-12); graphrnn kl " + fmt(loss2.kl) +
              ", prior/posterior params " + (no_latent_params ? "none" : "present")};
}

Verdict determinism() {
  const fs::path dir = kRunRoot / "c9";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = GVRNN_CLI;
  auto sh = [](const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); };
  if (sh(cli + " dataset com-small --seed 9 --out " + (dir / "data").string()) != 0) return {false, "dataset failed"};
  for (const char* run : {"run_a", "run_b"}) {
    if (sh(cli + " --threads 1 train --dataset " + (dir / "data").string() + " --out " + (dir / run).string() +
           " --seed 9 --steps 200 --quiet") != 0) {
      return {false, std::string(run) + " failed"};
    }
  }
  const bool metrics_same = slurp(dir / "run_a" / "metrics.tsv") == slurp(dir / "run_b" / "metrics.tsv");
  const bool ckpt_same = slurp(dir / "run_a" / "final.ckpt") == slurp(dir / "run_b" / "final.ckpt");
  nn::save_checkpoint(nn::load_checkpoint(dir / "run_a" / "final.ckpt"), dir / "resaved.ckpt");
  const bool resave_same = slurp(dir / "resaved.ckpt") == slurp(dir / "run_a" / "final.ckpt");
  return {metrics_same && ckpt_same && resave_same,
          std::string("two single-threaded 200-step runs: metrics ") + (metrics_same ? "identical" : "differ") +
              ", checkpoints " + (ckpt_same ? "identical" : "differ") + "; save/load/save " +
              (resave_same ? "identical" : "differs")};
}

Verdict schedule() {
  const train::TrainConfig c;
  const double a = train::lr_at_step(c, 0), b = train::lr_at_step(c, 12800), d = train::lr_at_step(c, 32000),
               e = train::lr_at_step(c, 100000);
  auto near = [](double x, double y) { return std::abs(x - y) <= 1e-15; };
  return {near(a, 0.001) && near(b, 0.0003) && near(d, 0.00009) && near(e, 0.00009),
          "lr " + fmt(a) + " / " + fmt(b) + " / " + fmt(d) + " / " + fmt(e) + " at steps 0 / 12800 / 32000 / 100000"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria{
      codec_round_trip, orbit_oracle,       kl_monte_carlo,   gradient_integrity, mmd_sanity,
      desk_structure,   attribute_ordering, variant_contract, determinism,        schedule};
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty()) {
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) wanted.push_back(i);
  }
  omp_set_num_threads(1);
  fs::create_directories(kRunRoot);
  bool all = true;
  for (int n : wanted) {
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::cerr << "unknown criterion " << n << "\n";
      return 1;
    }
    Verdict v;
    try {
      v = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::cout << "criterion " << n << " " << (v.pass ? "PASS" : "FAIL") << " " << v.details << "\n" << std::flush;
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
