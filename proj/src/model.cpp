#include "nest/model.hpp"

#include <set>
#include <sstream>

#include "nest/errors.hpp"
#include "nest/rng.hpp"

namespace nest {

std::vector<ParamSpec> param_registry(const Config& cfg) {
  cfg.validate();
  std::vector<ParamSpec> specs;
  auto append = [&](const std::vector<ParamSpec>& v) {
    specs.insert(specs.end(), v.begin(), v.end());
  };
  append(agent_encoder_param_specs(cfg));
  if (cfg.ablation.context_fusion) append(lane_encoder_param_specs(cfg));
  append(hyperform_param_specs(cfg));
  append(hyperpool_param_specs(cfg));
  append(predictor_param_specs(cfg));
  return specs;
}

ParamStore init_params(const Config& cfg) {
  return init_from_registry(param_registry(cfg), cfg.seed);
}

void validate_against_registry(const ParamStore& params, const Config& cfg) {
  std::set<std::string> expected;
  for (const ParamSpec& spec : param_registry(cfg)) expected.insert(spec.name);
  for (const auto& [name, tensor] : params.tensors()) {
    if (!expected.count(name)) {
      throw DataError("checkpoint tensor \"" + name + "\" is not in the registry for this config");
    }
    expected.erase(name);
    (void)tensor;
  }
  if (!expected.empty()) {
    throw DataError("checkpoint is missing parameter \"" + *expected.begin() + "\"");
  }
  for (const ParamSpec& spec : param_registry(cfg)) {
    const Tensor& t = params.get(spec.name);
    if (t.rows() != spec.rows || t.cols() != spec.cols) {
      std::ostringstream os;
      os << "checkpoint tensor \"" << spec.name << "\" has shape " << t.shape_str()
         << ", registry expects " << spec.rows << "x" << spec.cols;
      throw DataError(os.str());
    }
  }
}

Model::Model(Config cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

ModelForward Model::forward(Tape& tape, const NodeMap& params, const ModelInput& input,
                            bool training, std::uint64_t step) const {
  ModelForward fwd;
  fwd.vertices = encode_agents(tape, params, cfg_, input);

  const std::uint64_t scenario_salt = fnv1a64(input.scenario_id);

  if (cfg_.use_hypergraph()) {
    RewireKeys keys;
    keys.seed = cfg_.seed;
    keys.scenario_id = input.scenario_id;
    keys.step = (training && cfg_.rewire_resample) ? step : 0;
    fwd.hypergraph = form_hypergraph(tape, params, cfg_, fwd.vertices, input.valid,
                                     input.agent_ids, keys, training);

    GumbelPerIteration noise;
    if (training) {
      RngStream gumbel = RngStream(cfg_.seed, "gumbel").fork(scenario_salt).fork(step);
      for (int h = 0; h < cfg_.h_iters; ++h) {
        RngStream iter = gumbel.fork(static_cast<std::uint64_t>(h));
        noise.push_back(sample_gumbel(cfg_.s, cfg_.effective_modes(), iter));
      }
    }
    PoolOut pooled =
        pool(tape, params, cfg_, fwd.vertices, fwd.hypergraph->incidence, input.valid, noise);
    fwd.f_interaction = pooled.f_interaction;
  } else {
    PoolOut pooled = pool_complete_graph(tape, params, cfg_, fwd.vertices, input.valid);
    fwd.f_interaction = pooled.f_interaction;
  }

  std::optional<Node> f_lanes;
  if (cfg_.ablation.context_fusion) {
    f_lanes = encode_lanes(tape, params, cfg_, input.lanes);
  }
  fwd.f_context = fuse_context(tape, params, cfg_, fwd.f_interaction, f_lanes);

  Node f_target = tape.row(fwd.vertices, 0);
  fwd.prediction = predict_modes(tape, params, cfg_, fwd.f_context, f_target);
  return fwd;
}

LossBreakdown Model::loss(Tape& tape, const ModelForward& fwd, const Tensor& gt_future) const {
  return training_loss(tape, cfg_, fwd.prediction, gt_future);
}

}  // namespace nest
