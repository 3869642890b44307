#pragma once

#include <string>
#include <vector>

#include "nest/metrics.hpp"
#include "nest/model.hpp"

namespace nest {

struct TrainOptions {
  std::string ckpt_out;   // written when non-empty (plus .step<N> intermediates)
  std::string curve_out;  // CSV "step,loss" when non-empty
};

struct TrainResult {
  ParamStore params;
  std::vector<double> losses;  // one entry per step
};

// Plain SGD (optional momentum) over the winner-takes-all objective.
// Deterministic under a fixed (config, data): batches cycle the dataset in
// order and all sampling is keyed by (seed, scenario, step). A non-finite
// loss aborts with the step number.
TrainResult train(const Config& cfg, const std::vector<Scenario>& data,
                  const TrainOptions& options = {});

// Full metrics plus wall-clock inference timing normalized to 12 agents.
// The checkpoint's config drives the model; data must carry target futures.
MetricsReport evaluate(const ParamStore& params, const Config& cfg,
                       const std::vector<Scenario>& data);

// Per-scenario prediction JSONL in the original (de-normalized) frame:
// {scenario_id, modes:[{prob, traj:[[x,y,bx,by],...]}]}
void write_predictions(const ParamStore& params, const Config& cfg,
                       const std::vector<Scenario>& data, const std::string& path);

// Per-scenario hypergraph audit JSONL: {scenario_id, C, alpha, beta, E}.
void write_hypergraphs(const ParamStore& params, const Config& cfg,
                       const std::vector<Scenario>& data, const std::string& path);

}  // namespace nest
