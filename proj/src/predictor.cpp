#include "nest/predictor.hpp"

#include <cmath>

#include "nest/errors.hpp"

namespace nest {

namespace {

MlpSpec generator_spec(const Config& cfg) {
  return MlpSpec{{2 * cfg.d, cfg.gen_hidden, cfg.t_f * 4}};
}

MlpSpec prob_spec(const Config& cfg) {
  return MlpSpec{{2 * cfg.d, cfg.gen_hidden, cfg.effective_modes()}};
}

}  // namespace

std::vector<ParamSpec> predictor_param_specs(const Config& cfg) {
  std::vector<ParamSpec> specs;
  auto append = [&](const std::vector<ParamSpec>& v) {
    specs.insert(specs.end(), v.begin(), v.end());
  };
  if (cfg.ablation.context_fusion) {
    specs.push_back({"fusion.wq", cfg.d, cfg.d, cfg.d});
    specs.push_back({"fusion.wk", cfg.d, cfg.d, cfg.d});
    specs.push_back({"fusion.wv", cfg.d, cfg.d, cfg.d});
  }
  for (int k = 0; k < cfg.effective_modes(); ++k) {
    append(mlp_param_specs("predictor.gen" + std::to_string(k), generator_spec(cfg)));
  }
  append(mlp_param_specs("predictor.prob", prob_spec(cfg)));
  return specs;
}

Node fuse_context(Tape& tape, const NodeMap& params, const Config& cfg, Node f_interaction,
                  const std::optional<Node>& f_lanes) {
  if (!cfg.ablation.context_fusion || !f_lanes.has_value()) return f_interaction;
  Node q = tape.matmul(f_interaction, params.at("fusion.wq"));
  Node keys = tape.matmul(*f_lanes, params.at("fusion.wk"));
  Node values = tape.matmul(*f_lanes, params.at("fusion.wv"));
  return tape.add(f_interaction, attend(tape, q, keys, values));
}

PredictorOut predict_modes(Tape& tape, const NodeMap& params, const Config& cfg, Node f_context,
                           Node f_target) {
  Node input = tape.concat_cols(f_context, f_target);
  PredictorOut out;
  for (int k = 0; k < cfg.effective_modes(); ++k) {
    Node raw = mlp_forward(tape, params, "predictor.gen" + std::to_string(k),
                           generator_spec(cfg), input);
    Node steps = tape.reshape(raw, cfg.t_f, 4);
    Node mu = tape.cols(steps, 0, 2);
    Node b_raw = tape.cols(steps, 2, 4);
    Node b = cfg.scale_param == "softplus" ? tape.softplus(b_raw) : tape.exp(b_raw);
    out.mode_traj.push_back(tape.concat_cols(mu, b));
  }
  Node logits = mlp_forward(tape, params, "predictor.prob", prob_spec(cfg), input);
  out.probs = tape.softmax_rows(logits, 1.0);
  return out;
}

Node laplace_nll(Tape& tape, Node mode_traj, const Tensor& gt) {
  const Tensor& traj = tape.val(mode_traj);
  if (gt.rows() != traj.rows() || gt.cols() != 2) {
    throw ShapeError("laplace_nll: ground truth must be " + std::to_string(traj.rows()) +
                     "x2, got " + gt.shape_str());
  }
  Node mu = tape.cols(mode_traj, 0, 2);
  Node b = tape.cols(mode_traj, 2, 4);
  Node err = tape.abs(tape.sub(tape.constant(gt), mu));
  Node per_entry = tape.add(tape.log(b * 2.0), tape.div(err, b));
  // Sum over x/y, mean over the horizon.
  return tape.sum(per_entry) * (1.0 / static_cast<double>(traj.rows()));
}

double mean_displacement(const Tensor& traj, const Tensor& gt) {
  double total = 0;
  for (int t = 0; t < traj.rows(); ++t) {
    total += std::hypot(traj.at(t, 0) - gt.at(t, 0), traj.at(t, 1) - gt.at(t, 1));
  }
  return total / traj.rows();
}

int best_mode_by_displacement(const Tape& tape, const PredictorOut& pred, const Tensor& gt) {
  int best = 0;
  double best_ade = mean_displacement(tape.val(pred.mode_traj[0]), gt);
  for (std::size_t k = 1; k < pred.mode_traj.size(); ++k) {
    const double ade = mean_displacement(tape.val(pred.mode_traj[k]), gt);
    if (ade < best_ade) {
      best_ade = ade;
      best = static_cast<int>(k);
    }
  }
  return best;
}

LossBreakdown training_loss(Tape& tape, const Config& cfg, const PredictorOut& pred,
                            const Tensor& gt) {
  LossBreakdown out;
  out.best_mode = best_mode_by_displacement(tape, pred, gt);
  out.nll = laplace_nll(tape, pred.mode_traj[static_cast<std::size_t>(out.best_mode)], gt);
  out.ce = tape.neg(tape.log(tape.element(pred.probs, 0, out.best_mode)));
  out.total = tape.add(out.nll, out.ce * cfg.c_cls);
  return out;
}

PredictionSet extract_predictions(const Tape& tape, const PredictorOut& out) {
  PredictionSet set;
  const Tensor& probs = tape.val(out.probs);
  for (std::size_t k = 0; k < out.mode_traj.size(); ++k) {
    set.modes.push_back({tape.val(out.mode_traj[k]), probs.at(0, static_cast<int>(k))});
  }
  return set;
}

}  // namespace nest
