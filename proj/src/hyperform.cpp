#include "nest/hyperform.hpp"

#include <cmath>

#include "nest/errors.hpp"
#include "nest/rng.hpp"

namespace nest {

namespace {

MlpSpec alpha_spec(const Config& cfg) {
  return MlpSpec{{cfg.s, cfg.h_neuro, 1}, Activation::kTanh, Activation::kSigmoid};
}

MlpSpec beta_spec(const Config& cfg) {
  return MlpSpec{{cfg.d, cfg.h_neuro, 1}, Activation::kTanh, Activation::kSigmoid};
}

Tensor valid_column(const std::vector<std::uint8_t>& valid) {
  Tensor col(static_cast<int>(valid.size()), 1);
  for (std::size_t i = 0; i < valid.size(); ++i) col.at(static_cast<int>(i), 0) = valid[i] ? 1.0 : 0.0;
  return col;
}

Tensor masked_mean_weights(const std::vector<std::uint8_t>& valid) {
  int count = 0;
  for (std::uint8_t v : valid) count += v ? 1 : 0;
  if (count == 0) throw UsageError("masked mean over zero valid agents");
  Tensor w(1, static_cast<int>(valid.size()));
  for (std::size_t i = 0; i < valid.size(); ++i) {
    w.at(0, static_cast<int>(i)) = valid[i] ? 1.0 / count : 0.0;
  }
  return w;
}

}  // namespace

Tensor rewire_eta(const RewireKeys& keys, const std::vector<std::string>& agent_ids, int s) {
  RngStream base = RngStream(keys.seed, "rewire").fork(keys.scenario_id).fork(keys.step);
  Tensor eta(static_cast<int>(agent_ids.size()), s);
  for (std::size_t i = 0; i < agent_ids.size(); ++i) {
    RngStream row = base.fork(agent_ids[i]);
    for (int j = 0; j < s; ++j) eta.at(static_cast<int>(i), j) = row.at(static_cast<std::uint64_t>(j));
  }
  return eta;
}

Node compute_affinity(Tape& tape, Node vertices, Node prototypes,
                      const std::vector<std::uint8_t>& valid) {
  const int d = tape.val(vertices).cols();
  Node logits =
      tape.matmul(vertices, tape.transpose(prototypes)) * (1.0 / std::sqrt(static_cast<double>(d)));
  Node c = tape.sigmoid(logits);
  return tape.mul(c, tape.constant(valid_column(valid)));
}

Node modulate_threshold(Tape& tape, const NodeMap& params, const Config& cfg, Node clustering) {
  return mlp_forward(tape, params, "hyperform.alpha", alpha_spec(cfg), clustering);
}

Node modulate_connection(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices,
                         const std::vector<std::uint8_t>& valid) {
  Node pooled = tape.matmul(tape.constant(masked_mean_weights(valid)), vertices);
  return mlp_forward(tape, params, "hyperform.beta", beta_spec(cfg), pooled);
}

Tensor binarize(const Tensor& clustering, const Tensor& alpha) {
  if (alpha.rows() != clustering.rows() || alpha.cols() != 1) {
    throw ShapeError("binarize: alpha must be " + std::to_string(clustering.rows()) +
                     "x1, got " + alpha.shape_str());
  }
  Tensor hard(clustering.rows(), clustering.cols());
  for (int i = 0; i < clustering.rows(); ++i) {
    for (int j = 0; j < clustering.cols(); ++j) {
      hard.at(i, j) = clustering.at(i, j) >= alpha.at(i, 0) ? 1.0 : 0.0;
    }
  }
  return hard;
}

Tensor force_membership(const Tensor& hard, const Tensor& clustering,
                        const std::vector<std::uint8_t>& valid) {
  Tensor out = hard;
  for (int i = 0; i < out.rows(); ++i) {
    if (!valid[static_cast<std::size_t>(i)]) {
      for (int j = 0; j < out.cols(); ++j) out.at(i, j) = 0.0;
      continue;
    }
    bool any = false;
    for (int j = 0; j < out.cols(); ++j) any = any || out.at(i, j) > 0.5;
    if (any) continue;
    int best = 0;
    for (int j = 1; j < out.cols(); ++j) {
      if (clustering.at(i, j) > clustering.at(i, best)) best = j;
    }
    out.at(i, best) = 1.0;
  }
  return out;
}

Tensor rewire(const Tensor& hard, double beta, const Tensor& eta,
              const std::vector<std::uint8_t>& valid, bool threshold_mode) {
  if (!hard.same_shape(eta)) {
    throw ShapeError("rewire: eta shape " + eta.shape_str() + " does not match incidence " +
                     hard.shape_str());
  }
  Tensor out = hard;
  for (int i = 0; i < out.rows(); ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    for (int j = 0; j < out.cols(); ++j) {
      if (out.at(i, j) > 0.5) continue;
      const bool on = threshold_mode ? beta >= 0.5 : eta.at(i, j) <= beta;
      if (on) out.at(i, j) = 1.0;
    }
  }
  return out;
}

std::vector<ParamSpec> hyperform_param_specs(const Config& cfg) {
  std::vector<ParamSpec> specs;
  if (!cfg.use_hypergraph()) return specs;
  specs.push_back({"hyperform.prototypes", cfg.s, cfg.d, cfg.d});
  if (cfg.use_neuromodulator()) {
    for (const ParamSpec& p : mlp_param_specs("hyperform.alpha", alpha_spec(cfg))) specs.push_back(p);
    if (cfg.use_small_world()) {
      for (const ParamSpec& p : mlp_param_specs("hyperform.beta", beta_spec(cfg))) specs.push_back(p);
    }
  }
  return specs;
}

HyperformOut form_hypergraph(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices,
                             const std::vector<std::uint8_t>& valid,
                             const std::vector<std::string>& agent_ids, const RewireKeys& keys,
                             bool training) {
  HyperformOut out;
  out.clustering = compute_affinity(tape, vertices, params.at("hyperform.prototypes"), valid);

  out.alpha = cfg.use_neuromodulator()
                  ? modulate_threshold(tape, params, cfg, out.clustering)
                  : tape.constant(Tensor::full(tape.val(vertices).rows(), 1, cfg.alpha_const));

  out.hard = binarize(tape.val(out.clustering), tape.val(out.alpha));
  const Tensor forced = force_membership(out.hard, tape.val(out.clustering), valid);

  Tensor rewired_on(forced.rows(), forced.cols());
  if (cfg.use_small_world()) {
    out.beta = cfg.use_neuromodulator()
                   ? modulate_connection(tape, params, cfg, vertices, valid)
                   : tape.constant(Tensor::scalar(cfg.beta_const));
    const Tensor eta = rewire_eta(keys, agent_ids, forced.cols());
    const bool threshold_mode = !training && cfg.eval_rewire == "threshold";
    out.final_incidence =
        rewire(forced, tape.val(out.beta).scalar_value(), eta, valid, threshold_mode);
    for (std::size_t i = 0; i < rewired_on.size(); ++i) {
      rewired_on[i] = out.final_incidence[i] - forced[i];
    }
  } else {
    out.beta = tape.constant(Tensor::scalar(0.0));
    out.final_incidence = forced;
  }

  // Differentiable relaxation of the threshold comparison.
  Node soft = tape.sigmoid(tape.sub(out.clustering, out.alpha) * (1.0 / cfg.tau_e));
  soft = tape.mul(soft, tape.constant(valid_column(valid)));
  out.soft_incidence = tape.val(soft);

  // Backward substitute: soft relaxation on thresholded/forced entries, beta
  // on rewired-on entries, zero elsewhere.
  Node backward = tape.mul(soft, tape.constant(forced));
  if (cfg.use_small_world()) {
    backward = tape.add(backward, tape.mul(out.beta, tape.constant(rewired_on)));
  }
  out.incidence = tape.straight_through(backward, out.final_incidence);
  return out;
}

}  // namespace nest
