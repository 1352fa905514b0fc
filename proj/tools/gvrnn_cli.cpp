#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>
#include <json.hpp>

#include "gvrnn/diagnostics.hpp"
#include "gvrnn/error.hpp"
#include "gvrnn/evaluation.hpp"
#include "gvrnn/generation.hpp"
#include "gvrnn/graphset_io.hpp"
#include "gvrnn/hash.hpp"
#include "gvrnn/synthdata.hpp"
#include "gvrnn/training.hpp"

#ifndef GVRNN_VERSION
#define GVRNN_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gvrnn;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects the manifest of one command; written once into its output directory.
struct Manifest {
  json doc;

  Manifest(const std::string& command, const std::vector<std::string>& argv) {
    doc["command"] = command;
    doc["argv"] = argv;
    doc["tool_version"] = GVRNN_VERSION;
    doc["started"] = utc_now();
    doc["inputs"] = json::object();
  }
  void input(const fs::path& p) { doc["inputs"][p.string()] = file_fingerprint(p); }
  void write(const fs::path& dir) {
    doc["finished"] = utc_now();
    std::ofstream f(dir / "manifest.json", std::ios::trunc);
    f << doc.dump(2) << "\n";
  }
};

/// Marks an output directory incomplete when a command fails midway.
class OutputGuard {
 public:
  explicit OutputGuard(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    fs::remove(dir_ / "INCOMPLETE");
  }
  void fail(const std::string& message) {
    std::ofstream f(dir_ / "INCOMPLETE", std::ios::trunc);
    f << message << "\n";
  }

 private:
  fs::path dir_;
};

fs::path split_file(const fs::path& dataset, const char* name) {
  if (fs::is_directory(dataset)) return dataset / (std::string(name) + ".gset");
  return dataset;
}

std::vector<Graph> load_split(const fs::path& dataset, const char* name, Manifest& manifest) {
  const auto path = split_file(dataset, name);
  if (!fs::exists(path)) throw DataError("dataset file not found: " + path.string());
  manifest.input(path);
  return load_graphs(path);
}

// ---------------------------------------------------------------- dataset

struct DatasetArgs {
  std::string kind;
  int count = 0;
  std::uint64_t seed = 0;
  std::string out;
  int min_nodes = 0;
  int max_nodes = 0;
  double split = 0.8;
  int bandwidth_samples = 10;
};

void add_dataset(CLI::App& app, DatasetArgs& a) {
  auto* c = app.add_subcommand("dataset", "Generate a synthetic dataset with a train/test split");
  c->add_option("kind", a.kind, "com-small | com-mix | com-attr | ego-surrogate")->required();
  c->add_option("--count", a.count, "Number of graphs (default: the dataset's standard size)");
  c->add_option("--seed", a.seed, "Random seed");
  c->add_option("--out", a.out, "Output directory")->required();
  c->add_option("--min-nodes", a.min_nodes, "Override the smallest node count");
  c->add_option("--max-nodes", a.max_nodes, "Override the largest node count");
  c->add_option("--split", a.split, "Training fraction");
  c->add_option("--bandwidth-samples", a.bandwidth_samples, "BFS orders per graph for the bandwidth estimate");
}

int run_dataset(const DatasetArgs& a, Manifest& manifest) {
  const auto kind = synth::parse_dataset_kind(a.kind);
  const int count = a.count > 0 ? a.count : synth::default_count(kind);
  synth::DatasetOptions opts;
  if (a.min_nodes > 0) opts.min_nodes = a.min_nodes;
  if (a.max_nodes > 0) opts.max_nodes = a.max_nodes;
  if (a.bandwidth_samples < 1) throw UsageError("--bandwidth-samples must be >= 1");

  OutputGuard guard(a.out);
  try {
    auto graphs = synth::gen_dataset(kind, count, a.seed, opts);
    auto meta = synth::dataset_manifest(kind, count, a.seed, opts);
    Rng bw_rng(derive_seed(a.seed, 1));
    meta["estimated_m"] = estimate_bandwidth(graphs, a.bandwidth_samples, bw_rng);
    meta["bandwidth_samples"] = a.bandwidth_samples;
    Rng split_rng(derive_seed(a.seed, 2));
    auto split = synth::split_dataset(graphs, a.split, split_rng);
    meta["split_ratio"] = a.split;

    const fs::path out(a.out);
    auto with_part = [&](const char* part, std::size_t n) {
      json m = meta;
      m["part"] = part;
      m["graphs"] = n;
      return m;
    };
    save_graphs(graphs, out / "graphs.gset", with_part("all", graphs.size()));
    save_graphs(split.train, out / "train.gset", with_part("train", split.train.size()));
    save_graphs(split.test, out / "test.gset", with_part("test", split.test.size()));
    manifest.doc["config"] = {{"kind", synth::to_string(kind)}, {"count", count}, {"split", a.split},
                              {"bandwidth_samples", a.bandwidth_samples}};
    manifest.doc["seed"] = a.seed;
    manifest.doc["dataset"] = meta;
    manifest.write(out);
    std::cout << "wrote " << graphs.size() << " graphs (" << split.train.size() << " train, " << split.test.size()
              << " test), estimated m = " << meta["estimated_m"] << " to " << out.string() << "\n";
  } catch (const std::exception& e) {
    guard.fail(e.what());
    throw;
  }
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  train::TrainConfig cfg;
  std::string dataset;
  std::string out;
  std::string variant = "graphvrnn";
  std::string preset = "desk";
  std::string resume;
  bool quiet = false;
};

struct ModelOpts {
  CLI::Option* steps = nullptr;
  CLI::Option* checkpoint_every = nullptr;
};

void add_model_options(CLI::App* c, train::TrainConfig& cfg, std::string& variant) {
  c->add_option("--variant", variant, "graphvrnn | graphvrnn-nlp | graphrnn");
  c->add_option("--m", cfg.model.m, "Bandwidth (0: estimate from the training split)");
  c->add_option("--node-hidden", cfg.model.node_hidden, "Node-level GRU width");
  c->add_option("--edge-hidden", cfg.model.edge_hidden, "Edge-level GRU width");
  c->add_option("--node-layers", cfg.model.node_layers, "Node-level GRU layers");
  c->add_option("--edge-layers", cfg.model.edge_layers, "Edge-level GRU layers");
  c->add_option("--d-z", cfg.model.d_z, "Latent width");
  c->add_option("--mlp-hidden", cfg.model.mlp_hidden, "MLP hidden width (0: node hidden width)");
  c->add_option("--beta", cfg.model.beta, "KL weight");
  c->add_flag("!--no-auto-half-hidden", cfg.auto_half_hidden, "Keep node_hidden for graphs with <= 20 nodes");
}

ModelOpts add_train_options(CLI::App* c, train::TrainConfig& cfg) {
  ModelOpts o;
  o.steps = c->add_option("--steps", cfg.steps, "Optimizer steps");
  c->add_option("--batch-size", cfg.batch_size, "Graphs per batch");
  c->add_option("--lr", cfg.lr0, "Initial learning rate");
  c->add_option("--decay-factor", cfg.decay_factor, "Learning-rate decay factor");
  c->add_option("--decay-steps", cfg.decay_steps, "Steps at which the learning rate decays")->delimiter(',');
  c->add_option("--seed", cfg.seed, "Random seed");
  c->add_option("--log-every", cfg.log_every, "Metrics interval");
  o.checkpoint_every = c->add_option("--checkpoint-every", cfg.checkpoint_every, "Checkpoint interval");
  c->add_option("--bandwidth-samples", cfg.bandwidth_samples, "BFS orders per graph for the bandwidth estimate");
  c->add_flag("--fixed-order", cfg.fixed_order, "One BFS order per graph for the whole run");
  return o;
}

void apply_preset(const std::string& preset, train::TrainConfig& cfg, const ModelOpts& o) {
  const auto p = train::TrainConfig::preset(preset);
  if (o.steps->count() == 0) cfg.steps = p.steps;
  if (o.checkpoint_every->count() == 0) cfg.checkpoint_every = p.checkpoint_every;
}

std::function<void(const train::MetricsRow&)> progress_printer(bool quiet) {
  if (quiet) return {};
  return [](const train::MetricsRow& r) { std::cout << train::format_metrics_row(r) << "\n" << std::flush; };
}

int run_train(TrainArgs& a, Manifest& manifest) {
  OutputGuard guard(a.out);
  try {
    const fs::path out(a.out);
    train::RunResult result;
    if (!a.resume.empty()) {
      manifest.input(a.resume);
      auto ckpt = nn::load_checkpoint(a.resume);
      const auto dataset = a.dataset.empty() ? ckpt.meta.at("train").at("dataset_path").get<std::string>() : a.dataset;
      auto train_set = load_split(dataset, "train", manifest);
      manifest.doc["config"] = ckpt.meta.at("train");
      manifest.doc["resumed_from_step"] = ckpt.meta.at("step");
      result = train::resume_run(ckpt, train_set, out, progress_printer(a.quiet));
    } else {
      if (a.dataset.empty()) throw UsageError("train needs --dataset (or --resume)");
      a.cfg.model.variant = model::parse_variant(a.variant);
      a.cfg.dataset_path = a.dataset;
      a.cfg.validate();
      auto train_set = load_split(a.dataset, "train", manifest);
      train::Trainer probe(a.cfg, train_set);
      manifest.doc["config"] = probe.config().to_json();
      manifest.doc["preset"] = a.preset;
      result = train::train_run(a.cfg, train_set, out, progress_printer(a.quiet));
    }
    manifest.doc["seed"] = manifest.doc["config"]["seed"];
    manifest.doc["final_step"] = result.final_checkpoint.meta["step"];
    manifest.write(out);
    if (!result.metrics.empty()) {
      std::cout << "final " << train::format_metrics_row(result.metrics.back()) << "\n";
    }
  } catch (const std::exception& e) {
    guard.fail(e.what());
    throw;
  }
  return 0;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string checkpoint;
  gen::GenerationSpec spec;
  std::string out;
};

int run_generate(const GenerateArgs& a, Manifest& manifest) {
  manifest.input(a.checkpoint);
  const auto model = gen::load_model(nn::load_checkpoint(a.checkpoint));
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  try {
    auto graphs = gen::generate_set(model, a.spec);
    json meta = gen::generation_manifest(model, a.spec);
    meta["run"] = manifest.doc;
    meta["run"]["finished"] = utc_now();
    save_graphs(graphs, out, meta);
    std::cout << "wrote " << graphs.size() << " graphs to " << out.string() << "\n";
  } catch (const std::exception&) {
    std::error_code ec;
    fs::remove(out, ec);
    throw;
  }
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string generated;
  std::string test;
  double sigma = 1.0;
  std::string out;
};

int run_eval(const EvalArgs& a, Manifest& manifest) {
  manifest.input(a.generated);
  const auto test_path = split_file(a.test, "test");
  manifest.input(test_path);
  const auto gen_set = load_graph_set(a.generated);
  const auto test_set = load_graph_set(test_path);
  auto report = eval::evaluate(gen_set.graphs, test_set.graphs, a.sigma);
  report.provenance = {{"generated", gen_set.manifest}, {"test", test_set.manifest}};
  std::cout << report.to_text();
  if (!a.out.empty()) {
    OutputGuard guard(a.out);
    const fs::path out(a.out);
    {
      std::ofstream f(out / "report.txt", std::ios::trunc);
      f << report.to_text();
    }
    {
      std::ofstream f(out / "report.json", std::ios::trunc);
      f << report.to_json().dump(2) << "\n";
    }
    if (report.samples) eval::write_density_tsv(*report.samples, out / "density.tsv");
    manifest.doc["config"] = {{"sigma", a.sigma}};
    manifest.write(out);
  }
  return 0;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::string variant = "graphvrnn";
  std::uint64_t seed = 0;
  nn::GradCheckOptions opts;
  double tolerance = 1e-3;
};

int run_gradcheck(const GradcheckArgs& a) {
  const auto r = diag::check_variant_gradients(model::parse_variant(a.variant), a.seed, a.opts);
  std::cout << "variant " << a.variant << " probes " << r.probes << " max_rel_error " << r.max_rel_error << " worst "
            << r.worst_param << "[" << r.worst_index << "] analytic " << r.worst_analytic << " numeric "
            << r.worst_numeric << "\n";
  if (!(r.max_rel_error < a.tolerance)) {
    throw NumericError("gradient check failed: max relative error " + std::to_string(r.max_rel_error) + " >= " +
                       std::to_string(a.tolerance));
  }
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string dataset = "com-small";
  std::string variants = "graphrnn,graphvrnn,graphvrnn-nlp";
  int runs = 5;
  std::uint64_t seed = 0;
  std::string out;
  train::TrainConfig cfg;
  std::string preset = "desk";
  double sigma = 1.0;
  int count = 0;
  bool quiet = true;
};

int run_bench(BenchArgs& a, const ModelOpts& o, Manifest& manifest) {
  if (a.runs < 1) throw UsageError("--runs must be >= 1");
  apply_preset(a.preset, a.cfg, o);
  std::vector<std::string> variants;
  {
    std::stringstream ss(a.variants);
    std::string v;
    while (std::getline(ss, v, ',')) {
      if (!v.empty()) variants.push_back(v);
    }
  }
  if (variants.empty()) throw UsageError("--variants is empty");
  for (const auto& v : variants) model::parse_variant(v);

  OutputGuard guard(a.out);
  const fs::path out(a.out);
  try {
    fs::path data_dir = a.dataset;
    if (!fs::exists(data_dir)) {
      // A dataset name: generate it with the bench seed.
      const auto kind = synth::parse_dataset_kind(a.dataset);
      data_dir = out / "data";
      Manifest dm("dataset", {});
      DatasetArgs da;
      da.kind = a.dataset;
      da.seed = a.seed;
      da.out = data_dir.string();
      da.count = synth::default_count(kind);
      run_dataset(da, dm);
    }
    auto train_set = load_split(data_dir, "train", manifest);
    auto test_set = load_split(data_dir, "test", manifest);

    std::map<std::string, std::vector<eval::MmdReport>> reports;
    json runs = json::array();
    for (const auto& variant : variants) {
      for (int r = 0; r < a.runs; ++r) {
        const auto run_seed = derive_seed(a.seed, static_cast<std::uint64_t>(r));
        const fs::path run_dir = out / variant / ("run" + std::to_string(r));
        auto cfg = a.cfg;
        cfg.model.variant = model::parse_variant(variant);
        cfg.seed = run_seed;
        cfg.dataset_path = data_dir.string();
        std::cout << variant << " run " << r << " seed " << run_seed << "\n" << std::flush;
        auto result = train::train_run(cfg, train_set, run_dir, progress_printer(a.quiet));
        const auto model = gen::load_model(result.final_checkpoint);
        gen::GenerationSpec spec;
        spec.count = a.count > 0 ? a.count : static_cast<int>(test_set.size());
        spec.seed = run_seed;
        auto generated = gen::generate_set(model, spec);
        save_graphs(generated, run_dir / "generated.gset", gen::generation_manifest(model, spec));
        auto report = eval::evaluate(generated, test_set, a.sigma);
        {
          std::ofstream f(run_dir / "report.json", std::ios::trunc);
          f << report.to_json().dump(2) << "\n";
        }
        runs.push_back({{"variant", variant}, {"run", r}, {"seed", run_seed}, {"report", report.to_json()}});
        reports[variant].push_back(std::move(report));
      }
    }

    std::ostringstream table;
    table << "variant         runs  degree      clustering  orbit       emd_com1    emd_com2    emd_all\n";
    json summary = json::object();
    for (const auto& variant : variants) {
      const auto& rs = reports[variant];
      auto avg = [&](auto get) {
        double s = 0.0;
        int n = 0;
        for (const auto& r : rs) {
          if (auto v = get(r)) {
            s += *v;
            ++n;
          }
        }
        return n > 0 ? std::optional<double>(s / n) : std::nullopt;
      };
      const auto d = avg([](const eval::MmdReport& r) { return std::optional<double>(r.degree_mmd); });
      const auto c = avg([](const eval::MmdReport& r) { return std::optional<double>(r.clustering_mmd); });
      const auto orb = avg([](const eval::MmdReport& r) { return std::optional<double>(r.orbit_mmd); });
      const auto e1 = avg([](const eval::MmdReport& r) { return r.emd_com1; });
      const auto e2 = avg([](const eval::MmdReport& r) { return r.emd_com2; });
      const auto ea = avg([](const eval::MmdReport& r) { return r.emd_all; });
      auto cell = [](const std::optional<double>& v) {
        char buf[32];
        if (v) {
          std::snprintf(buf, sizeof buf, "%-12.4g", *v);
        } else {
          std::snprintf(buf, sizeof buf, "%-12s", "-");
        }
        return std::string(buf);
      };
      char head[40];
      std::snprintf(head, sizeof head, "%-16s%-6zu", variant.c_str(), rs.size());
      table << head << cell(d) << cell(c) << cell(orb) << cell(e1) << cell(e2) << cell(ea) << "\n";
      auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
      summary[variant] = {{"degree_mmd", opt(d)}, {"clustering_mmd", opt(c)}, {"orbit_mmd", opt(orb)},
                          {"emd_com1", opt(e1)},  {"emd_com2", opt(e2)},       {"emd_all", opt(ea)}};
    }
    std::cout << table.str();
    {
      std::ofstream f(out / "report.txt", std::ios::trunc);
      f << table.str();
    }
    {
      std::ofstream f(out / "report.json", std::ios::trunc);
      f << json{{"averages", summary}, {"runs", runs}, {"sigma", a.sigma}}.dump(2) << "\n";
    }
    manifest.doc["config"] = a.cfg.to_json();
    manifest.doc["seed"] = a.seed;
    manifest.doc["variants"] = variants;
    manifest.doc["runs"] = a.runs;
    manifest.write(out);
  } catch (const std::exception& e) {
    guard.fail(e.what());
    throw;
  }
  return 0;
}

std::string escape_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return json(s).dump();
}

int fail(ErrorKind kind, const std::string& message) {
  static const char* names[] = {"", "usage", "data", "numeric"};
  const int code = static_cast<int>(kind);
  std::cerr << "gvrnn: error kind=" << names[code] << " code=" << code << " message=" << escape_line(message) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational autoregressive graph generation: datasets, training, sampling and evaluation"};
  app.set_version_flag("--version", GVRNN_VERSION);
  app.set_config("--config", "", "TOML or INI file; command-line flags take precedence");
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads for parallel kernels (0: runtime default)");

  DatasetArgs dataset_args;
  add_dataset(app, dataset_args);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset's training split");
  train_cmd->add_option("--dataset", train_args.dataset, "Dataset directory or graph-set file");
  train_cmd->add_option("--out", train_args.out, "Run directory")->required();
  train_cmd->add_option("--preset", train_args.preset, "desk (6000 steps) | paper (36000 steps)");
  train_cmd->add_option("--resume", train_args.resume, "Checkpoint to continue from");
  train_cmd->add_flag("--quiet", train_args.quiet, "No per-interval metrics on stdout");
  const auto train_opts = add_train_options(train_cmd, train_args.cfg);
  add_model_options(train_cmd, train_args.cfg, train_args.variant);

  GenerateArgs gen_args;
  auto* gen_cmd = app.add_subcommand("generate", "Sample graphs from a checkpoint");
  gen_cmd->add_option("--checkpoint", gen_args.checkpoint, "Checkpoint file")->required();
  gen_cmd->add_option("--count", gen_args.spec.count, "Number of graphs");
  gen_cmd->add_option("--max-n", gen_args.spec.max_n, "Node cap (0: largest training graph)");
  gen_cmd->add_option("--seed", gen_args.spec.seed, "Random seed");
  gen_cmd->add_option("--out", gen_args.out, "Output graph-set file")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Compare generated graphs with a test set");
  eval_cmd->add_option("--generated", eval_args.generated, "Generated graph-set file")->required();
  eval_cmd->add_option("--test", eval_args.test, "Test graph-set file or dataset directory")->required();
  eval_cmd->add_option("--sigma", eval_args.sigma, "Kernel width");
  eval_cmd->add_option("--out", eval_args.out, "Report directory");

  GradcheckArgs gc_args;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the training loss on a tiny model");
  gc_cmd->add_option("--variant", gc_args.variant, "graphvrnn | graphvrnn-nlp | graphrnn");
  gc_cmd->add_option("--seed", gc_args.seed, "Random seed");
  gc_cmd->add_option("--probes", gc_args.opts.probes, "Coordinates to probe");
  gc_cmd->add_option("--step", gc_args.opts.step, "Central-difference step");
  gc_cmd->add_option("--tolerance", gc_args.tolerance, "Largest accepted relative error");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Train, generate and evaluate several variants over several seeds");
  bench_cmd->add_option("--dataset", bench_args.dataset, "Dataset directory or dataset name");
  bench_cmd->add_option("--variants", bench_args.variants, "Comma-separated variants");
  bench_cmd->add_option("--runs", bench_args.runs, "Runs per variant");
  bench_cmd->add_option("--out", bench_args.out, "Output directory")->required();
  bench_cmd->add_option("--preset", bench_args.preset, "desk | paper");
  bench_cmd->add_option("--sigma", bench_args.sigma, "Kernel width");
  bench_cmd->add_option("--count", bench_args.count, "Graphs generated per run (0: test-set size)");
  bench_cmd->add_option("--base-seed", bench_args.seed, "Base seed; run r trains and samples with derive_seed(base, r)");
  std::string bench_variant_unused;
  const auto bench_opts = add_train_options(bench_cmd, bench_args.cfg);
  add_model_options(bench_cmd, bench_args.cfg, bench_variant_unused);
  bench_cmd->get_option("--variant")->description("Ignored; use --variants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(ErrorKind::usage, e.what());
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (threads > 0) omp_set_num_threads(threads);
    CLI::App* sub = app.get_subcommands().front();
    Manifest manifest(sub->get_name(), args);
    if (sub == app.get_subcommand("dataset")) return run_dataset(dataset_args, manifest);
    if (sub == train_cmd) {
      apply_preset(train_args.preset, train_args.cfg, train_opts);
      return run_train(train_args, manifest);
    }
    if (sub == gen_cmd) return run_generate(gen_args, manifest);
    if (sub == eval_cmd) return run_eval(eval_args, manifest);
    if (sub == gc_cmd) return run_gradcheck(gc_args);
    if (sub == bench_cmd) return run_bench(bench_args, bench_opts, manifest);
    return fail(ErrorKind::usage, "unknown subcommand");
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const json::exception& e) {
    return fail(ErrorKind::data, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(ErrorKind::data, e.what());
  } catch (const std::exception& e) {
    return fail(ErrorKind::data, e.what());
  }
}
