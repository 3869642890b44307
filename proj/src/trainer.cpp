#include "nest/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "nest/errors.hpp"
#include "nest/param_store.hpp"

namespace nest {

namespace {

using nlohmann::json;

std::vector<ModelInput> prepare_all(const Model& model, const std::vector<Scenario>& data,
                                    bool require_future) {
  std::vector<ModelInput> inputs;
  inputs.reserve(data.size());
  int max_agents = 1;
  for (const Scenario& s : data) {
    ModelInput input = model.prepare(s);
    if (require_future && !input.has_future) {
      throw DataError("scenario " + s.scenario_id + " has no target future");
    }
    max_agents = std::max(max_agents, static_cast<int>(input.agent_ids.size()));
    inputs.push_back(std::move(input));
  }
  for (ModelInput& input : inputs) {
    pad_model_input(input, max_agents, model.config().t_h);
  }
  return inputs;
}

json tensor_to_json(const Tensor& t) {
  json rows = json::array();
  for (int i = 0; i < t.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < t.cols(); ++j) row.push_back(t.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TrainResult train(const Config& cfg, const std::vector<Scenario>& data,
                  const TrainOptions& options) {
  cfg.validate();
  if (data.empty()) throw DataError("training data is empty");
  Model model(cfg);
  std::vector<ModelInput> inputs = prepare_all(model, data, /*require_future=*/true);

  TrainResult result;
  result.params = init_params(cfg);

  std::map<std::string, Tensor> velocity;
  if (cfg.momentum > 0.0) {
    for (const auto& [name, t] : result.params.tensors()) {
      velocity.emplace(name, Tensor(t.rows(), t.cols()));
    }
  }

  std::ofstream curve;
  if (!options.curve_out.empty()) {
    curve.open(options.curve_out);
    if (!curve) throw DataError("cannot write loss curve: " + options.curve_out);
    curve << "step,loss\n";
  }

  std::size_t cursor = 0;
  for (int step = 0; step < cfg.steps; ++step) {
    Tape tape;
    NodeMap leaves = result.params.make_leaves(tape);

    const int batch = std::min<int>(cfg.batch, static_cast<int>(inputs.size()));
    Node total;
    try {
      for (int b = 0; b < batch; ++b) {
        const ModelInput& input = inputs[cursor];
        cursor = (cursor + 1) % inputs.size();
        ModelForward fwd =
            model.forward(tape, leaves, input, /*training=*/true, static_cast<std::uint64_t>(step));
        LossBreakdown loss = model.loss(tape, fwd, input.target_future);
        total = b == 0 ? loss.total : tape.add(total, loss.total);
      }
      total = total * (1.0 / batch);
      tape.backward(total);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at step " + std::to_string(step) + ": " + e.what());
    }

    const double loss_value = tape.val(total).scalar_value();
    result.losses.push_back(loss_value);
    if (curve.is_open()) curve << step << "," << loss_value << "\n";

    for (const auto& [name, node] : leaves) {
      const Tensor& g = tape.grad(node);
      if (g.size() == 0) continue;
      Tensor& param = result.params.mutable_get(name);
      if (cfg.momentum > 0.0) {
        Tensor& v = velocity.at(name);
        for (std::size_t i = 0; i < param.size(); ++i) {
          v[i] = cfg.momentum * v[i] + g[i];
          param[i] -= cfg.lr * v[i];
        }
      } else {
        for (std::size_t i = 0; i < param.size(); ++i) param[i] -= cfg.lr * g[i];
      }
    }

    if (cfg.ckpt_every > 0 && !options.ckpt_out.empty() && (step + 1) % cfg.ckpt_every == 0 &&
        step + 1 < cfg.steps) {
      save_checkpoint(options.ckpt_out + ".step" + std::to_string(step + 1), result.params, cfg);
    }
  }

  if (!options.ckpt_out.empty()) save_checkpoint(options.ckpt_out, result.params, cfg);
  return result;
}

MetricsReport evaluate(const ParamStore& params, const Config& cfg,
                       const std::vector<Scenario>& data) {
  cfg.validate();
  validate_against_registry(params, cfg);
  if (data.empty()) throw DataError("evaluation data is empty");
  Model model(cfg);
  std::vector<ModelInput> inputs = prepare_all(model, data, /*require_future=*/true);

  std::vector<PredictionSet> preds;
  std::vector<Tensor> gts;
  preds.reserve(inputs.size());
  double total_ms = 0;
  double total_agents = 0;
  for (const ModelInput& input : inputs) {
    const auto start = std::chrono::steady_clock::now();
    Tape tape;
    NodeMap leaves = params.make_leaves(tape);
    ModelForward fwd = model.forward(tape, leaves, input, /*training=*/false, 0);
    PredictionSet pred = extract_predictions(tape, fwd.prediction);
    const auto end = std::chrono::steady_clock::now();
    total_ms += std::chrono::duration<double, std::milli>(end - start).count();
    int valid_agents = 0;
    for (std::uint8_t v : input.valid) valid_agents += v ? 1 : 0;
    total_agents += valid_agents;
    preds.push_back(std::move(pred));
    gts.push_back(input.target_future);
  }

  MetricsReport report;
  report.scenario_count = static_cast<int>(inputs.size());
  const int k_max = cfg.effective_modes();
  for (int k = 1; k <= k_max; ++k) {
    double sum = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) sum += min_ade(preds[i], gts[i], k);
    report.min_ade_k[k] = sum / static_cast<double>(preds.size());
  }
  {
    double sum = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) sum += min_fde(preds[i], gts[i], 1);
    report.min_fde_1 = sum / static_cast<double>(preds.size());
  }
  const double span = cfg.t_f * data.front().dt;
  for (int h = 1; h <= static_cast<int>(span + 1e-9); ++h) {
    report.rmse_s[std::to_string(h) + "s"] =
        rmse_at_horizon(preds, gts, static_cast<double>(h), data.front().dt);
  }
  report.inference_ms_per_12_agents = total_agents > 0 ? total_ms / total_agents * 12.0 : 0.0;
  return report;
}

void write_predictions(const ParamStore& params, const Config& cfg,
                       const std::vector<Scenario>& data, const std::string& path) {
  cfg.validate();
  validate_against_registry(params, cfg);
  Model model(cfg);
  std::vector<ModelInput> inputs = prepare_all(model, data, /*require_future=*/false);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write predictions: " + path);
  for (const ModelInput& input : inputs) {
    Tape tape;
    NodeMap leaves = params.make_leaves(tape);
    ModelForward fwd = model.forward(tape, leaves, input, /*training=*/false, 0);
    PredictionSet pred = extract_predictions(tape, fwd.prediction);

    json modes = json::array();
    for (const PredictedMode& mode : pred.modes) {
      json traj = json::array();
      for (int t = 0; t < mode.traj.rows(); ++t) {
        const auto p = input.frame.to_world({mode.traj.at(t, 0), mode.traj.at(t, 1)});
        const auto b = input.frame.scale_to_world({mode.traj.at(t, 2), mode.traj.at(t, 3)});
        traj.push_back({p[0], p[1], b[0], b[1]});
      }
      modes.push_back({{"prob", mode.prob}, {"traj", std::move(traj)}});
    }
    out << json{{"scenario_id", input.scenario_id}, {"modes", std::move(modes)}}.dump() << "\n";
  }
}

void write_hypergraphs(const ParamStore& params, const Config& cfg,
                       const std::vector<Scenario>& data, const std::string& path) {
  cfg.validate();
  validate_against_registry(params, cfg);
  if (!cfg.use_hypergraph()) {
    throw UsageError("inspect requires the hypergraph to be enabled in the config");
  }
  Model model(cfg);
  std::vector<ModelInput> inputs = prepare_all(model, data, /*require_future=*/false);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write hypergraphs: " + path);
  for (const ModelInput& input : inputs) {
    Tape tape;
    NodeMap leaves = params.make_leaves(tape);
    ModelForward fwd = model.forward(tape, leaves, input, /*training=*/false, 0);
    const HyperformOut& hg = *fwd.hypergraph;
    json doc = {{"scenario_id", input.scenario_id},
                {"C", tensor_to_json(tape.val(hg.clustering))},
                {"alpha", tensor_to_json(tape.val(hg.alpha))},
                {"beta", tape.val(hg.beta).scalar_value()},
                {"E", tensor_to_json(hg.final_incidence)}};
    out << doc.dump() << "\n";
  }
}

}  // namespace nest
