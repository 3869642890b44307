#include "nest/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "nest/errors.hpp"

namespace nest {

std::vector<int> top_k_modes(const PredictionSet& pred, int k) {
  const int n = static_cast<int>(pred.modes.size());
  if (k < 1 || k > n) {
    throw UsageError("top-k of " + std::to_string(k) + " modes requested, model has " +
                     std::to_string(n));
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return pred.modes[static_cast<std::size_t>(a)].prob > pred.modes[static_cast<std::size_t>(b)].prob;
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

double min_ade(const PredictionSet& pred, const Tensor& gt, int k) {
  double best = std::numeric_limits<double>::infinity();
  for (int m : top_k_modes(pred, k)) {
    best = std::min(best, mean_displacement(pred.modes[static_cast<std::size_t>(m)].traj, gt));
  }
  return best;
}

double min_fde(const PredictionSet& pred, const Tensor& gt, int k) {
  double best = std::numeric_limits<double>::infinity();
  const int last = gt.rows() - 1;
  for (int m : top_k_modes(pred, k)) {
    const Tensor& traj = pred.modes[static_cast<std::size_t>(m)].traj;
    best = std::min(best, std::hypot(traj.at(last, 0) - gt.at(last, 0),
                                     traj.at(last, 1) - gt.at(last, 1)));
  }
  return best;
}

double rmse_at_horizon(const std::vector<PredictionSet>& preds, const std::vector<Tensor>& gts,
                       double horizon_s, double dt) {
  if (preds.empty() || preds.size() != gts.size()) {
    throw UsageError("rmse_at_horizon: predictions and ground truths must align");
  }
  const int t_f = gts.front().rows();
  if (horizon_s > t_f * dt + 1e-9) {
    throw UsageError("rmse_at_horizon: horizon " + std::to_string(horizon_s) +
                     "s beyond prediction span " + std::to_string(t_f * dt) + "s");
  }
  // Future step t (1-based) sits at time t * dt; pick the closest.
  int step = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int t = 1; t <= t_f; ++t) {
    const double gap = std::abs(t * dt - horizon_s);
    if (gap < best_gap - 1e-12) {
      best_gap = gap;
      step = t;
    }
  }
  const int row = step - 1;

  double sq_sum = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int top = top_k_modes(preds[i], 1).front();
    const Tensor& traj = preds[i].modes[static_cast<std::size_t>(top)].traj;
    const double dx = traj.at(row, 0) - gts[i].at(row, 0);
    const double dy = traj.at(row, 1) - gts[i].at(row, 1);
    sq_sum += dx * dx + dy * dy;
  }
  return std::sqrt(sq_sum / static_cast<double>(preds.size()));
}

std::string MetricsReport::to_json_text() const {
  nlohmann::json j;
  nlohmann::json ade = nlohmann::json::object();
  for (const auto& [k, v] : min_ade_k) ade[std::to_string(k)] = v;
  j["min_ade"] = std::move(ade);
  j["min_fde_1"] = min_fde_1;
  nlohmann::json rmse = nlohmann::json::object();
  for (const auto& [h, v] : rmse_s) rmse[h] = v;
  j["rmse"] = std::move(rmse);
  j["inference_ms_per_12_agents"] = inference_ms_per_12_agents;
  j["scenario_count"] = scenario_count;
  return j.dump();
}

}  // namespace nest
