#pragma once

#include <optional>
#include <vector>

#include "nest/config.hpp"
#include "nest/nn.hpp"

namespace nest {

std::vector<ParamSpec> predictor_param_specs(const Config& cfg);

// Single-query attention over lane features with a residual to F_i; with no
// lanes the interaction feature passes through untouched.
Node fuse_context(Tape& tape, const NodeMap& params, const Config& cfg, Node f_interaction,
                  const std::optional<Node>& f_lanes);

struct PredictorOut {
  std::vector<Node> mode_traj;  // K nodes, each t_f x 4: [x, y, b_x, b_y]
  Node probs;                   // 1 x K, on the simplex
};

// K independent generator MLPs on [F_c, F_a0]; coordinates pass through as
// emitted, scales go through exp (or softplus) so b > 0 by construction.
PredictorOut predict_modes(Tape& tape, const NodeMap& params, const Config& cfg, Node f_context,
                           Node f_target);

// Mean over t_f of sum_{c in {x,y}} [log(2 b_c) + |gt_c - mu_c| / b_c].
Node laplace_nll(Tape& tape, Node mode_traj, const Tensor& gt);

struct LossBreakdown {
  Node total;
  Node nll;
  Node ce;
  int best_mode = 0;
};

// Winner-takes-all: the mode closest to ground truth in mean displacement
// (scales cannot influence selection) pays the Laplace NLL, plus
// c_cls * crossentropy(P, best).
LossBreakdown training_loss(Tape& tape, const Config& cfg, const PredictorOut& pred,
                            const Tensor& gt);

// --- value-level views -------------------------------------------------

struct PredictedMode {
  Tensor traj;  // t_f x 4
  double prob = 0;
};

struct PredictionSet {
  std::vector<PredictedMode> modes;
};

PredictionSet extract_predictions(const Tape& tape, const PredictorOut& out);

double mean_displacement(const Tensor& traj, const Tensor& gt);
int best_mode_by_displacement(const Tape& tape, const PredictorOut& pred, const Tensor& gt);

}  // namespace nest
