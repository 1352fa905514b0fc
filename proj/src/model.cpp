#include "gvrnn/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <tuple>

#include "gvrnn/error.hpp"

namespace gvrnn::model {

using nn::Matrix;
using nn::Var;

Variant parse_variant(const std::string& name) {
  if (name == "graphvrnn") return Variant::graphvrnn;
  if (name == "graphvrnn-nlp") return Variant::graphvrnn_nlp;
  if (name == "graphrnn") return Variant::graphrnn;
  throw UsageError("unknown variant '" + name + "' (expected graphvrnn, graphvrnn-nlp, graphrnn)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::graphvrnn: return "graphvrnn";
    case Variant::graphvrnn_nlp: return "graphvrnn-nlp";
    case Variant::graphrnn: return "graphrnn";
  }
  return "unknown";
}

void ModelConfig::validate() const {
  if (m < 1 || node_hidden < 1 || edge_hidden < 1 || node_layers < 1 || edge_layers < 1 || k < 0 || mlp_hidden < 0) {
    throw UsageError("model config: sizes must be positive (k and mlp_hidden may be 0)");
  }
  if (variational() && d_z < 1) throw UsageError("model config: d_z must be positive for variational variants");
  if (!(beta >= 0.0)) throw UsageError("model config: beta must be >= 0");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"variant", to_string(variant)}, {"m", m},
          {"node_hidden", node_hidden},    {"edge_hidden", edge_hidden},
          {"node_layers", node_layers},    {"edge_layers", edge_layers},
          {"d_z", d_z},                    {"mlp_hidden", mlp_hidden},
          {"k", k},                        {"beta", beta}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.m = j.at("m").get<int>();
    c.node_hidden = j.at("node_hidden").get<int>();
    c.edge_hidden = j.at("edge_hidden").get<int>();
    c.node_layers = j.at("node_layers").get<int>();
    c.edge_layers = j.at("edge_layers").get<int>();
    c.d_z = j.at("d_z").get<int>();
    c.mlp_hidden = j.at("mlp_hidden").get<int>();
    c.k = j.at("k").get<int>();
    c.beta = j.at("beta").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

nn::ParameterSet init_model(const ModelConfig& c, Rng& rng) {
  c.validate();
  nn::ParameterSet p;
  const int H = c.node_hidden;
  const int M = c.mlp_width();
  p.add("node_rnn.start", nn::uniform_fan_in(1, c.node_input(), 1, rng));
  nn::add_gru_stack(p, "node_rnn", c.node_input(), H, c.node_layers, rng);
  if (c.variational()) nn::add_mlp(p, "posterior", {H, M, M, 2 * c.d_z}, rng);
  if (c.learned_prior()) nn::add_mlp(p, "prior", {H, M, M, 2 * c.d_z}, rng);
  nn::add_linear(p, "edge_init", c.latent_width() + H, c.edge_layers * c.edge_hidden, rng);
  p.add("edge_rnn.start", nn::uniform_fan_in(1, 1, 1, rng));
  nn::add_gru_stack(p, "edge_rnn", 1, c.edge_hidden, c.edge_layers, rng);
  nn::add_linear(p, "edge_out", c.edge_hidden, 1, rng);
  if (c.k > 0) nn::add_mlp(p, "attr", {c.latent_width() + H + c.m, M, M, c.k}, rng);
  return p;
}

Batch make_batch(std::span<const BfsSequence> sequences, const ModelConfig& c, int extra_steps) {
  if (sequences.empty()) throw UsageError("make_batch: empty batch");
  if (extra_steps < 0) throw UsageError("make_batch: negative padding");
  Batch b;
  b.size = static_cast<int>(sequences.size());
  int longest = 0;
  for (const auto& s : sequences) {
    if (s.m != c.m) throw UsageError("make_batch: sequence bandwidth " + std::to_string(s.m) + " != model m " + std::to_string(c.m));
    if (s.k != c.k) throw UsageError("make_batch: sequence attribute dim " + std::to_string(s.k) + " != model k " + std::to_string(c.k));
    if (s.n < 1) throw UsageError("make_batch: empty sequence");
    longest = std::max(longest, s.n);
  }
  b.steps = longest + 1 + extra_steps;

  const int width_in = c.node_input();
  b.node_inputs.assign(static_cast<std::size_t>(b.steps), Matrix::Zero(b.size, width_in));
  for (int i = 0; i < b.size; ++i) {
    const auto& s = sequences[static_cast<std::size_t>(i)];
    for (int j = 1; j <= s.n; ++j) {
      Matrix& in = b.node_inputs[static_cast<std::size_t>(j - 1)];
      if (j >= 2) {
        const auto& row = s.s_rows[static_cast<std::size_t>(j - 2)];
        for (std::size_t q = 0; q < row.size(); ++q) in(i, static_cast<Eigen::Index>(q)) = row[q];
      }
      for (int a = 0; a < c.k; ++a) in(i, c.m + a) = s.x_rows[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(a)];
    }
  }

  const int first_step = c.k > 0 ? 1 : 2;
  for (int i = 0; i < b.size; ++i) {
    const auto& s = sequences[static_cast<std::size_t>(i)];
    for (int t = first_step; t <= s.n + 1; ++t) b.rows.push_back({i, t, row_width(t, c.m)});
  }
  std::stable_sort(b.rows.begin(), b.rows.end(), [](const Batch::Row& x, const Batch::Row& y) { return x.width > y.width; });
  if (b.rows.empty()) throw UsageError("make_batch: no active steps");

  const auto R = static_cast<Eigen::Index>(b.rows.size());
  auto bit = [&](const Batch::Row& r, int slot) -> double {
    const auto& s = sequences[static_cast<std::size_t>(r.seq)];
    if (r.step > s.n) return 0.0;  // end-of-sequence row
    return s.s_rows[static_cast<std::size_t>(r.step - 2)][static_cast<std::size_t>(slot - 1)];
  };

  b.s_rows = Matrix::Zero(R, c.m);
  b.attr_targets = Matrix::Zero(R, c.k);
  b.attr_mask = Matrix::Zero(R, c.k);
  for (Eigen::Index r = 0; r < R; ++r) {
    const auto& row = b.rows[static_cast<std::size_t>(r)];
    for (int q = 1; q <= row.width; ++q) b.s_rows(r, q - 1) = bit(row, q);
    b.edge_slots += row.width;
    const auto& s = sequences[static_cast<std::size_t>(row.seq)];
    if (c.k > 0 && row.step <= s.n) {
      for (int a = 0; a < c.k; ++a) {
        b.attr_targets(r, a) = s.x_rows[static_cast<std::size_t>(row.step - 1)][static_cast<std::size_t>(a)];
        b.attr_mask(r, a) = 1.0;
      }
      b.attr_slots += c.k;
    }
  }

  const int max_width = b.rows.front().width;
  for (int q = 1; q <= max_width; ++q) {
    Eigen::Index count = 0;
    while (count < R && b.rows[static_cast<std::size_t>(count)].width >= q) ++count;
    b.slot_targets.push_back(b.s_rows.block(0, q - 1, count, 1));
    if (q >= 2) b.slot_inputs.push_back(b.s_rows.block(0, q - 2, count, 1));
  }
  return b;
}

namespace {

struct Heads {
  Var h_prev;
  Var z;
  Var q_mean, q_logvar, p_mean, p_logvar;
  Matrix eps;
};

std::pair<Var, Var> gaussian_head(nn::Tape& t, const nn::ParameterSet& params, const std::string& prefix,
                                  const ModelConfig& c, Var h) {
  Var out = nn::mlp_forward(t, params, prefix, 3, h);
  return {nn::slice_cols(out, 0, c.d_z), nn::clamp(nn::slice_cols(out, c.d_z, c.d_z), nn::kLogvarMin, nn::kLogvarMax)};
}

std::vector<Var> edge_initial_state(nn::Tape& t, const nn::ParameterSet& params, const ModelConfig& c, Var z, Var h_prev) {
  Var input = h_prev;
  if (c.variational()) {
    const std::array<Var, 2> parts{z, h_prev};
    input = nn::concat_cols(parts);
  }
  Var init = nn::linear(t, params, "edge_init", input);
  std::vector<Var> state;
  for (int l = 0; l < c.edge_layers; ++l) state.push_back(nn::slice_cols(init, l * c.edge_hidden, c.edge_hidden));
  return state;
}

Var attr_decoder(nn::Tape& t, const nn::ParameterSet& params, const ModelConfig& c, Var z, Var h_prev, Var s_row) {
  std::vector<Var> parts;
  if (c.variational()) parts.push_back(z);
  parts.push_back(h_prev);
  parts.push_back(s_row);
  return nn::mlp_forward(t, params, "attr", 3, nn::concat_cols(parts));
}

}  // namespace

ForwardResult forward_teacher_forced(nn::Tape& t, const nn::ParameterSet& params, const ModelConfig& c,
                                     const Batch& batch, Rng& rng, const ForwardOptions& opts) {
  const int B = batch.size;
  const int H = c.node_hidden;
  const auto R = static_cast<Eigen::Index>(batch.rows.size());

  // Node-level RNN: h_0 from the start token, then h_j after (S_j, X_j).
  std::vector<Var> state;
  for (int l = 0; l < c.node_layers; ++l) state.push_back(t.constant(Matrix::Zero(B, H)));
  std::vector<Var> tops;
  tops.reserve(static_cast<std::size_t>(batch.steps) + 1);
  tops.push_back(nn::gru_stack_step(t, params, "node_rnn", nn::broadcast_rows(t.param(params, "node_rnn.start"), B), state));
  for (int j = 1; j <= batch.steps; ++j) {
    tops.push_back(nn::gru_stack_step(t, params, "node_rnn", t.constant(batch.node_inputs[static_cast<std::size_t>(j - 1)]), state));
  }
  Var all_h = nn::concat_rows(tops);

  std::vector<int> prev_idx, cur_idx;
  prev_idx.reserve(static_cast<std::size_t>(R));
  cur_idx.reserve(static_cast<std::size_t>(R));
  for (const auto& row : batch.rows) {
    prev_idx.push_back((row.step - 1) * B + row.seq);
    cur_idx.push_back(row.step * B + row.seq);
  }

  Heads heads;
  heads.h_prev = nn::gather_rows(all_h, prev_idx);
  if (c.variational()) {
    Var h_cur = nn::gather_rows(all_h, std::move(cur_idx));
    std::tie(heads.q_mean, heads.q_logvar) = gaussian_head(t, params, "posterior", c, h_cur);
    if (c.learned_prior()) {
      std::tie(heads.p_mean, heads.p_logvar) = gaussian_head(t, params, "prior", c, heads.h_prev);
    } else {
      heads.p_mean = t.constant(Matrix::Zero(R, c.d_z));
      heads.p_logvar = t.constant(Matrix::Zero(R, c.d_z));
    }
    heads.eps = nn::standard_normal(R, c.d_z, rng);
    heads.z = opts.zero_latent ? t.constant(Matrix::Zero(R, c.d_z)) : nn::reparameterize(heads.q_mean, heads.q_logvar, heads.eps);
  }

  ForwardResult res;

  // Edge-level RNN, packed: at slot q only the prefix of rows with width >= q runs.
  std::vector<Var> edge_state = edge_initial_state(t, params, c, heads.z, heads.h_prev);
  std::vector<Var> bce_parts;
  std::vector<Var> slot_logits;
  for (std::size_t q = 0; q < batch.slot_targets.size(); ++q) {
    const auto count = batch.slot_targets[q].rows();
    for (auto& s : edge_state) s = nn::head_rows(s, count);
    Var input = q == 0 ? nn::broadcast_rows(t.param(params, "edge_rnn.start"), count) : t.constant(batch.slot_inputs[q - 1]);
    Var top = nn::gru_stack_step(t, params, "edge_rnn", input, edge_state);
    Var logits = nn::linear(t, params, "edge_out", top);
    bce_parts.push_back(nn::bce_with_logits(logits, batch.slot_targets[q], Matrix(), batch.edge_slots));
    if (opts.collect_outputs) slot_logits.push_back(logits);
  }
  res.bce = bce_parts.empty() ? t.constant(Matrix::Zero(1, 1)) : nn::sum_scalars(bce_parts);

  Var attr_pred;
  if (c.k > 0) {
    attr_pred = attr_decoder(t, params, c, heads.z, heads.h_prev, t.constant(batch.s_rows));
    res.mse = batch.attr_slots > 0 ? nn::squared_error(attr_pred, batch.attr_targets, batch.attr_mask, batch.attr_slots)
                                   : t.constant(Matrix::Zero(1, 1));
  } else {
    res.mse = t.constant(Matrix::Zero(1, 1));
  }

  res.kl = c.variational() ? nn::kl_diag(heads.q_mean, heads.q_logvar, heads.p_mean, heads.p_logvar, static_cast<double>(R))
                           : t.constant(Matrix::Zero(1, 1));

  if (opts.collect_outputs) {
    res.outputs.assign(static_cast<std::size_t>(B), {});
    for (Eigen::Index r = 0; r < R; ++r) {
      const auto& row = batch.rows[static_cast<std::size_t>(r)];
      StepOutputs so;
      so.step = row.step;
      so.edge_logits.resize(row.width);
      for (int q = 0; q < row.width; ++q) so.edge_logits(q) = slot_logits[static_cast<std::size_t>(q)].value()(r, 0);
      if (c.k > 0 && batch.attr_mask(r, 0) > 0) {
        so.attr_pred = attr_pred.value().row(r).transpose();
      }
      so.h_prev = heads.h_prev.value().row(r).transpose();
      if (c.variational()) {
        so.q_params = nn::GaussianParams{heads.q_mean.value().row(r).transpose(), heads.q_logvar.value().row(r).transpose()};
        so.p_params = nn::GaussianParams{heads.p_mean.value().row(r).transpose(), heads.p_logvar.value().row(r).transpose()};
        so.eps = heads.eps.row(r).transpose();
      }
      res.outputs[static_cast<std::size_t>(row.seq)].push_back(std::move(so));
    }
    for (auto& seq : res.outputs) {
      std::sort(seq.begin(), seq.end(), [](const StepOutputs& a, const StepOutputs& b) { return a.step < b.step; });
    }
  }
  return res;
}

LossTerms elbo_loss(nn::Tape& t, const ForwardResult& fwd, const ModelConfig& c, double beta) {
  LossTerms out;
  out.bce = fwd.bce.value()(0, 0);
  out.mse = fwd.mse.value()(0, 0);
  out.kl = c.variational() ? fwd.kl.value()(0, 0) : 0.0;
  const std::array<Var, 3> parts{fwd.bce, fwd.mse, nn::scale(fwd.kl, beta)};
  out.total_var = nn::sum_scalars(parts);
  out.total = out.total_var.value()(0, 0);
  (void)t;
  return out;
}

LossTerms elbo_loss(const std::vector<std::vector<StepOutputs>>& outputs, std::span<const BfsSequence> targets,
                    const ModelConfig& c, double beta) {
  if (outputs.size() != targets.size()) throw UsageError("elbo_loss: outputs and targets differ in length");
  std::vector<double> logits, bits, preds, attrs;
  double kl_sum = 0.0;
  int steps = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& seq = targets[i];
    for (const auto& so : outputs[i]) {
      ++steps;
      for (Eigen::Index q = 0; q < so.edge_logits.size(); ++q) {
        logits.push_back(so.edge_logits(q));
        bits.push_back(so.step <= seq.n ? seq.s_rows[static_cast<std::size_t>(so.step - 2)][static_cast<std::size_t>(q)] : 0.0);
      }
      if (so.attr_pred) {
        for (int a = 0; a < c.k; ++a) {
          preds.push_back((*so.attr_pred)(a));
          attrs.push_back(seq.x_rows[static_cast<std::size_t>(so.step - 1)][static_cast<std::size_t>(a)]);
        }
      }
      if (c.variational()) kl_sum += nn::kl_diag_gaussians(*so.q_params, *so.p_params);
    }
  }
  auto as_col = [](const std::vector<double>& v) { return Matrix(Eigen::Map<const Matrix>(v.data(), static_cast<Eigen::Index>(v.size()), 1)); };
  const auto rl = nn::recon_losses(as_col(logits), as_col(bits), Matrix(), as_col(preds), as_col(attrs), Matrix());
  LossTerms out;
  out.bce = rl.bce;
  out.mse = rl.mse;
  out.kl = c.variational() && steps > 0 ? kl_sum / steps : 0.0;
  out.total = out.bce + out.mse + beta * out.kl;
  return out;
}

SampledStep sample_step(const nn::ParameterSet& params, const ModelConfig& c, SamplerState& state,
                        std::span<const std::uint8_t> prev_s, std::span<const double> prev_x, Rng& rng) {
  nn::Tape t(false);
  std::vector<Var> layers;
  if (state.layers.empty()) {
    state.layers.assign(static_cast<std::size_t>(c.node_layers), Matrix::Zero(1, c.node_hidden));
  }
  for (const auto& h : state.layers) layers.push_back(t.constant(h));

  Var input;
  if (state.step == 0) {
    input = t.param(params, "node_rnn.start");
  } else {
    if (prev_s.size() > static_cast<std::size_t>(c.m)) throw UsageError("sample_step: previous row wider than m");
    if (prev_x.size() != static_cast<std::size_t>(c.k)) throw UsageError("sample_step: previous attribute row has wrong width");
    Matrix in = Matrix::Zero(1, c.node_input());
    for (std::size_t q = 0; q < prev_s.size(); ++q) in(0, static_cast<Eigen::Index>(q)) = prev_s[q];
    for (int a = 0; a < c.k; ++a) in(0, c.m + a) = prev_x[static_cast<std::size_t>(a)];
    input = t.constant(std::move(in));
  }
  Var h_prev = nn::gru_stack_step(t, params, "node_rnn", input, layers);
  for (std::size_t l = 0; l < layers.size(); ++l) state.layers[l] = layers[l].value();
  const int step = ++state.step;

  Var z;
  if (c.variational()) {
    const Matrix eps = nn::standard_normal(1, c.d_z, rng);
    if (c.learned_prior()) {
      auto [mean, logvar] = gaussian_head(t, params, "prior", c, h_prev);
      z = nn::reparameterize(mean, logvar, eps);
    } else {
      z = t.constant(eps);
    }
  }

  SampledStep out;
  const int width = row_width(step, c.m);
  out.s_row.assign(static_cast<std::size_t>(width), 0);
  if (width > 0) {
    std::vector<Var> edge_state = edge_initial_state(t, params, c, z, h_prev);
    for (int q = 1; q <= width; ++q) {
      Var in = q == 1 ? t.param(params, "edge_rnn.start") : t.constant(Matrix::Constant(1, 1, out.s_row[static_cast<std::size_t>(q - 2)]));
      Var top = nn::gru_stack_step(t, params, "edge_rnn", in, edge_state);
      const double logit = nn::linear(t, params, "edge_out", top).value()(0, 0);
      const double prob = 1.0 / (1.0 + std::exp(-logit));
      out.s_row[static_cast<std::size_t>(q - 1)] = rng.uniform() < prob ? 1 : 0;
    }
  }
  if (c.k > 0) {
    Matrix s = Matrix::Zero(1, c.m);
    for (int q = 0; q < width; ++q) s(0, q) = out.s_row[static_cast<std::size_t>(q)];
    Var x = attr_decoder(t, params, c, z, h_prev, t.constant(std::move(s)));
    out.x_row.assign(x.value().data(), x.value().data() + c.k);
  }
  return out;
}

}  // namespace gvrnn::model
