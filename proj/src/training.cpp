#include "gvrnn/training.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "gvrnn/error.hpp"
#include "gvrnn/nn/optim.hpp"

namespace gvrnn::train {

namespace {

constexpr int kOrderRetries = 64;

std::string fmt_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return ec == std::errc{} ? std::string(buf.data(), end) : std::string("nan");
}

}  // namespace

void TrainConfig::validate() const {
  if (steps <= 0) throw UsageError("train config: steps must be positive");
  if (batch_size < 1) throw UsageError("train config: batch_size must be positive");
  if (!(lr0 > 0.0) || !(decay_factor > 0.0)) throw UsageError("train config: lr0 and decay_factor must be positive");
  if (!std::is_sorted(decay_steps.begin(), decay_steps.end())) throw UsageError("train config: decay steps must be ascending");
  if (log_every < 1 || checkpoint_every < 1 || bandwidth_samples < 1) throw UsageError("train config: intervals must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"steps", steps},
          {"batch_size", batch_size},
          {"lr0", lr0},
          {"decay_factor", decay_factor},
          {"decay_steps", decay_steps},
          {"seed", seed},
          {"dataset_path", dataset_path},
          {"model", model.to_json()},
          {"auto_bandwidth", auto_bandwidth},
          {"auto_half_hidden", auto_half_hidden},
          {"bandwidth_samples", bandwidth_samples},
          {"log_every", log_every},
          {"checkpoint_every", checkpoint_every},
          {"fixed_order", fixed_order}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.steps = j.at("steps").get<std::int64_t>();
    c.batch_size = j.at("batch_size").get<int>();
    c.lr0 = j.at("lr0").get<double>();
    c.decay_factor = j.at("decay_factor").get<double>();
    c.decay_steps = j.at("decay_steps").get<std::vector<std::int64_t>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.dataset_path = j.at("dataset_path").get<std::string>();
    c.model = model::ModelConfig::from_json(j.at("model"));
    c.auto_bandwidth = j.at("auto_bandwidth").get<bool>();
    c.auto_half_hidden = j.at("auto_half_hidden").get<bool>();
    c.bandwidth_samples = j.at("bandwidth_samples").get<int>();
    c.log_every = j.at("log_every").get<int>();
    c.checkpoint_every = j.at("checkpoint_every").get<std::int64_t>();
    c.fixed_order = j.at("fixed_order").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::preset(const std::string& name) {
  TrainConfig c;
  if (name == "desk") {
    c.steps = 6000;
  } else if (name == "paper") {
    c.steps = 36000;
    c.checkpoint_every = 4000;
  } else {
    throw UsageError("unknown preset '" + name + "' (expected desk or paper)");
  }
  return c;
}

double lr_at_step(const TrainConfig& cfg, std::int64_t step) {
  const auto decays = std::upper_bound(cfg.decay_steps.begin(), cfg.decay_steps.end(), step) - cfg.decay_steps.begin();
  return cfg.lr0 * std::pow(cfg.decay_factor, static_cast<double>(decays));
}

std::string metrics_header() { return "step\tlr\ttotal\tbce\tmse\tkl"; }

std::string format_metrics_row(const MetricsRow& r) {
  return std::to_string(r.step) + "\t" + fmt_double(r.lr) + "\t" + fmt_double(r.total) + "\t" + fmt_double(r.bce) +
         "\t" + fmt_double(r.mse) + "\t" + fmt_double(r.kl);
}

model::ModelConfig resolve_model_config(const TrainConfig& cfg, const std::vector<Graph>& train) {
  if (train.empty()) throw DataError("training split is empty");
  model::ModelConfig mc = cfg.model;
  int max_nodes = 0;
  const int k = train.front().attr_dim();
  for (const auto& g : train) {
    if (!g.is_connected()) throw DataError("training graph with node " + std::to_string(g.first_unreachable()) + " unreachable");
    if (g.attr_dim() != k) throw DataError("training graphs disagree on attribute dimension");
    max_nodes = std::max(max_nodes, g.num_nodes());
  }
  mc.k = k;
  Rng bw_rng(derive_seed(cfg.seed, 2));
  const int estimated = estimate_bandwidth(train, cfg.bandwidth_samples, bw_rng);
  if (cfg.auto_bandwidth && mc.m <= 0) mc.m = estimated;
  if (mc.m < estimated) {
    throw DataError("model bandwidth m=" + std::to_string(mc.m) + " is below the training split's estimated bandwidth " +
                    std::to_string(estimated));
  }
  if (cfg.auto_half_hidden && max_nodes <= 20) mc.node_hidden = std::max(1, mc.node_hidden / 2);
  mc.validate();
  return mc;
}

Trainer::Trainer(TrainConfig cfg, std::vector<Graph> train) : cfg_(std::move(cfg)), train_(std::move(train)) {
  cfg_.validate();
  cfg_.model = resolve_model_config(cfg_, train_);
  // Resolution is applied once; a resumed run must not halve again.
  cfg_.auto_bandwidth = false;
  cfg_.auto_half_hidden = false;
  Rng init_rng(derive_seed(cfg_.seed, 0));
  params_ = model::init_model(cfg_.model, init_rng);
  rng_ = Rng(derive_seed(cfg_.seed, 1));
  prepare_orders();
}

Trainer Trainer::resume(const nn::Checkpoint& ckpt, std::vector<Graph> train) {
  Trainer t;
  try {
    t.cfg_ = TrainConfig::from_json(ckpt.meta.at("train"));
    t.step_ = ckpt.meta.at("step").get<std::int64_t>();
    t.rng_.set_state(ckpt.meta.at("rng").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint is missing training state: ") + e.what());
  }
  t.train_ = std::move(train);
  t.params_ = ckpt.params;
  t.prepare_orders();
  return t;
}

void Trainer::prepare_orders() {
  fixed_orders_.clear();
  if (!cfg_.fixed_order) return;
  Rng order_rng(derive_seed(cfg_.seed, 3));
  for (const auto& g : train_) {
    std::vector<int> order;
    for (int attempt = 0; attempt < kOrderRetries; ++attempt) {
      order = bfs_order(g, order_rng);
      if (required_bandwidth(g, order) <= cfg_.model.m) break;
    }
    fixed_orders_.push_back(std::move(order));
  }
}

std::vector<BfsSequence> Trainer::sample_batch(Rng& rng) const {
  std::vector<BfsSequence> batch;
  batch.reserve(static_cast<std::size_t>(cfg_.batch_size));
  const int n_train = static_cast<int>(train_.size());
  for (int i = 0; i < cfg_.batch_size; ++i) {
    const auto gi = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n_train)));
    const Graph& g = train_[gi];
    if (cfg_.fixed_order) {
      batch.push_back(encode_sequence(g, fixed_orders_[gi], cfg_.model.m));
      continue;
    }
    // A fresh order can exceed the estimated bandwidth; redraw rather than truncate.
    for (int attempt = 0;; ++attempt) {
      auto order = bfs_order(g, rng);
      if (required_bandwidth(g, order) <= cfg_.model.m) {
        batch.push_back(encode_sequence(g, order, cfg_.model.m));
        break;
      }
      if (attempt + 1 == kOrderRetries) {
        throw DataError("no BFS order within bandwidth " + std::to_string(cfg_.model.m) + " for training graph " +
                        std::to_string(gi) + " after " + std::to_string(kOrderRetries) + " draws");
      }
    }
  }
  return batch;
}

namespace {

MetricsRow evaluate(const TrainConfig& cfg, const nn::ParameterSet& params, const std::vector<BfsSequence>& batch,
                    std::int64_t step, Rng& rng, nn::Gradients* grads) {
  const auto b = model::make_batch(batch, cfg.model);
  nn::Tape tape(grads != nullptr);
  auto fwd = model::forward_teacher_forced(tape, params, cfg.model, b, rng);
  auto loss = model::elbo_loss(tape, fwd, cfg.model, cfg.model.beta);
  MetricsRow row{step, lr_at_step(cfg, step), loss.total, loss.bce, loss.mse, loss.kl};
  if (!std::isfinite(loss.total)) {
    throw NumericError("non-finite loss at step " + std::to_string(step) + " (bce=" + fmt_double(loss.bce) +
                       " mse=" + fmt_double(loss.mse) + " kl=" + fmt_double(loss.kl) + ")");
  }
  if (grads) {
    tape.backward(loss.total_var);
    *grads = tape.gradients(params);
  }
  return row;
}

}  // namespace

MetricsRow Trainer::step() {
  const auto batch = sample_batch(rng_);
  nn::Gradients grads;
  MetricsRow row = evaluate(cfg_, params_, batch, step_, rng_, &grads);
  nn::adam_step(params_, grads, row.lr);
  ++step_;
  return row;
}

MetricsRow Trainer::evaluate_next() const {
  Rng rng = rng_;
  const auto batch = sample_batch(rng);
  return evaluate(cfg_, params_, batch, step_, rng, nullptr);
}

nn::Checkpoint Trainer::checkpoint() const {
  nn::Checkpoint c;
  c.meta["format"] = "gvrnn-checkpoint";
  c.meta["model"] = cfg_.model.to_json();
  c.meta["train"] = cfg_.to_json();
  c.meta["step"] = step_;
  c.meta["rng"] = rng_.state();
  int max_nodes = 0;
  for (const auto& g : train_) max_nodes = std::max(max_nodes, g.num_nodes());
  c.meta["max_train_nodes"] = max_nodes;
  c.params = params_;
  return c;
}

namespace {

RunResult run_loop(Trainer& trainer, const std::filesystem::path& run_dir, bool append,
                   const std::function<void(const MetricsRow&)>& on_log) {
  const auto& cfg = trainer.config();
  std::ofstream metrics;
  if (!run_dir.empty()) {
    std::filesystem::create_directories(run_dir / "checkpoints");
    {
      std::ofstream f(run_dir / "config.json", std::ios::trunc);
      f << cfg.to_json().dump(2) << "\n";
    }
    const bool fresh = !append || !std::filesystem::exists(run_dir / "metrics.tsv");
    metrics.open(run_dir / "metrics.tsv", fresh ? std::ios::trunc : std::ios::app);
    if (fresh) metrics << metrics_header() << "\n";
  }

  RunResult result;
  while (!trainer.done()) {
    MetricsRow row;
    try {
      row = trainer.step();
    } catch (const NumericError&) {
      if (!run_dir.empty()) nn::save_checkpoint(trainer.checkpoint(), run_dir / "diagnostic.ckpt");
      throw;
    }
    const bool last = trainer.done();
    if (row.step % cfg.log_every == 0 || last) {
      result.metrics.push_back(row);
      if (metrics.is_open()) metrics << format_metrics_row(row) << "\n" << std::flush;
      if (on_log) on_log(row);
    }
    if (!run_dir.empty() && trainer.current_step() % cfg.checkpoint_every == 0 && !last) {
      nn::save_checkpoint(trainer.checkpoint(),
                          run_dir / "checkpoints" / ("step_" + std::to_string(trainer.current_step()) + ".ckpt"));
    }
  }
  result.final_checkpoint = trainer.checkpoint();
  if (!run_dir.empty()) nn::save_checkpoint(result.final_checkpoint, run_dir / "final.ckpt");
  return result;
}

}  // namespace

RunResult train_run(const TrainConfig& cfg, const std::vector<Graph>& train, const std::filesystem::path& run_dir,
                    const std::function<void(const MetricsRow&)>& on_log) {
  Trainer trainer(cfg, train);
  return run_loop(trainer, run_dir, false, on_log);
}

RunResult resume_run(const nn::Checkpoint& ckpt, const std::vector<Graph>& train, const std::filesystem::path& run_dir,
                     const std::function<void(const MetricsRow&)>& on_log) {
  Trainer trainer = Trainer::resume(ckpt, train);
  return run_loop(trainer, run_dir, true, on_log);
}

}  // namespace gvrnn::train
