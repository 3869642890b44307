#pragma once

#include <map>
#include <string>
#include <vector>

#include "nest/predictor.hpp"

namespace nest {

// Top-k selection ranks modes by predicted probability (descending; ties
// keep the lower mode index).
std::vector<int> top_k_modes(const PredictionSet& pred, int k);

// Min over the top-k modes of the mean / final-step Euclidean displacement.
double min_ade(const PredictionSet& pred, const Tensor& gt, int k);
double min_fde(const PredictionSet& pred, const Tensor& gt, int k);

// RMSE of the highest-probability mode at the future step closest to
// horizon_s (ties towards the earlier step), over the whole dataset.
double rmse_at_horizon(const std::vector<PredictionSet>& preds, const std::vector<Tensor>& gts,
                       double horizon_s, double dt);

struct MetricsReport {
  std::map<int, double> min_ade_k;       // k -> metres
  double min_fde_1 = 0;                  // metres
  std::map<std::string, double> rmse_s;  // "1s", "2s", ... -> metres
  double inference_ms_per_12_agents = 0;
  int scenario_count = 0;

  std::string to_json_text() const;
};

}  // namespace nest
