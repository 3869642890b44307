#pragma once

#include <optional>
#include <vector>

#include "nest/config.hpp"
#include "nest/encoder.hpp"
#include "nest/hyperform.hpp"
#include "nest/hyperpool.hpp"
#include "nest/predictor.hpp"
#include "nest/scenario.hpp"

namespace nest {

// Ordered list of every parameter tensor for a config; ablation flags add
// and remove whole groups, which is what the registry-diff tests compare.
std::vector<ParamSpec> param_registry(const Config& cfg);
ParamStore init_params(const Config& cfg);

// Checks that a checkpoint carries exactly the registry of its config.
void validate_against_registry(const ParamStore& params, const Config& cfg);

struct ModelForward {
  Node vertices;       // encoder output, (n+1) x d
  Node f_interaction;  // 1 x d
  Node f_context;      // 1 x d
  PredictorOut prediction;
  std::optional<HyperformOut> hypergraph;  // absent when the hypergraph is ablated
};

class Model {
 public:
  explicit Model(Config cfg);
  const Config& config() const { return cfg_; }

  ModelInput prepare(const Scenario& s) const { return prepare_scenario(s, cfg_); }

  // One scenario through encoder -> hypergraph forming -> pooling ->
  // context fusion -> multimodal decoder. `step` keys the rewiring and
  // Gumbel draws during training.
  ModelForward forward(Tape& tape, const NodeMap& params, const ModelInput& input, bool training,
                       std::uint64_t step) const;

  LossBreakdown loss(Tape& tape, const ModelForward& fwd, const Tensor& gt_future) const;

 private:
  Config cfg_;
};

}  // namespace nest
