#include "nest/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nest/errors.hpp"
#include "nest/rng.hpp"

namespace nest {

using nlohmann::json;

void Config::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw UsageError(std::string("config: ") + name + " must be >= 1");
  };
  positive(d, "d");
  positive(s, "s");
  positive(k_modes, "K");
  positive(t_h, "t_h");
  positive(t_f, "t_f");
  positive(h_neuro, "h_neuro");
  positive(gen_hidden, "gen_hidden");
  positive(batch, "batch");
  positive(lane_points, "lane_points");
  if (h_iters < 0) throw UsageError("config: H must be >= 0");
  if (steps < 0) throw UsageError("config: steps must be >= 0");
  if (ckpt_every < 0) throw UsageError("config: ckpt_every must be >= 0");
  if (!(tau > 0.0)) throw UsageError("config: tau must be positive");
  if (!(tau_e > 0.0)) throw UsageError("config: tau_e must be positive");
  if (!(lr > 0.0)) throw UsageError("config: lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw UsageError("config: momentum must be in [0, 1)");
  if (!(lane_segment_len > 0.0)) throw UsageError("config: lane_segment_len must be positive");
  if (eval_rewire != "sample" && eval_rewire != "threshold") {
    throw UsageError("config: eval_rewire must be \"sample\" or \"threshold\"");
  }
  if (scale_param != "exp" && scale_param != "softplus") {
    throw UsageError("config: scale_param must be \"exp\" or \"softplus\"");
  }
  if (alpha_const < 0.0 || alpha_const > 1.0 || beta_const < 0.0 || beta_const > 1.0) {
    throw UsageError("config: alpha_const and beta_const must be in [0, 1]");
  }
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw UsageError(std::string("config: unknown key \"") + it.key() + "\" in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("config: bad value for \"") + key + "\": " + e.what());
    }
  }
}

}  // namespace

Config config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config: top level must be a JSON object");

  static const std::set<std::string> known = {
      "d", "s", "K", "H", "t_h", "t_f", "tau", "tau_e", "h_neuro",
      "lr", "momentum", "steps", "batch", "seed", "c_cls", "ckpt_every",
      "eval_rewire", "rewire_resample", "scale_param", "gen_hidden",
      "lane_segment_len", "lane_points", "alpha_const", "beta_const", "ablation"};
  reject_unknown(j, known, "config");

  Config cfg;
  read(j, "d", cfg.d);
  read(j, "s", cfg.s);
  read(j, "K", cfg.k_modes);
  read(j, "H", cfg.h_iters);
  read(j, "t_h", cfg.t_h);
  read(j, "t_f", cfg.t_f);
  read(j, "tau", cfg.tau);
  read(j, "tau_e", cfg.tau_e);
  read(j, "h_neuro", cfg.h_neuro);
  read(j, "lr", cfg.lr);
  read(j, "momentum", cfg.momentum);
  read(j, "steps", cfg.steps);
  read(j, "batch", cfg.batch);
  read(j, "seed", cfg.seed);
  read(j, "c_cls", cfg.c_cls);
  read(j, "ckpt_every", cfg.ckpt_every);
  read(j, "eval_rewire", cfg.eval_rewire);
  read(j, "rewire_resample", cfg.rewire_resample);
  read(j, "scale_param", cfg.scale_param);
  read(j, "gen_hidden", cfg.gen_hidden);
  read(j, "lane_segment_len", cfg.lane_segment_len);
  read(j, "lane_points", cfg.lane_points);
  read(j, "alpha_const", cfg.alpha_const);
  read(j, "beta_const", cfg.beta_const);

  if (j.contains("ablation")) {
    const json& a = j.at("ablation");
    if (!a.is_object()) throw UsageError("config: \"ablation\" must be an object");
    static const std::set<std::string> flags = {
        "neuromodulator", "small_world", "hypergraph", "context_fusion", "multimodal"};
    reject_unknown(a, flags, "ablation");
    read(a, "neuromodulator", cfg.ablation.neuromodulator);
    read(a, "small_world", cfg.ablation.small_world);
    read(a, "hypergraph", cfg.ablation.hypergraph);
    read(a, "context_fusion", cfg.ablation.context_fusion);
    read(a, "multimodal", cfg.ablation.multimodal);
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json_text(const Config& cfg) {
  json j;
  j["d"] = cfg.d;
  j["s"] = cfg.s;
  j["K"] = cfg.k_modes;
  j["H"] = cfg.h_iters;
  j["t_h"] = cfg.t_h;
  j["t_f"] = cfg.t_f;
  j["tau"] = cfg.tau;
  j["tau_e"] = cfg.tau_e;
  j["h_neuro"] = cfg.h_neuro;
  j["lr"] = cfg.lr;
  j["momentum"] = cfg.momentum;
  j["steps"] = cfg.steps;
  j["batch"] = cfg.batch;
  j["seed"] = cfg.seed;
  j["c_cls"] = cfg.c_cls;
  j["ckpt_every"] = cfg.ckpt_every;
  j["eval_rewire"] = cfg.eval_rewire;
  j["rewire_resample"] = cfg.rewire_resample;
  j["scale_param"] = cfg.scale_param;
  j["gen_hidden"] = cfg.gen_hidden;
  j["lane_segment_len"] = cfg.lane_segment_len;
  j["lane_points"] = cfg.lane_points;
  j["alpha_const"] = cfg.alpha_const;
  j["beta_const"] = cfg.beta_const;
  j["ablation"] = {
      {"neuromodulator", cfg.ablation.neuromodulator},
      {"small_world", cfg.ablation.small_world},
      {"hypergraph", cfg.ablation.hypergraph},
      {"context_fusion", cfg.ablation.context_fusion},
      {"multimodal", cfg.ablation.multimodal},
  };
  // nlohmann objects iterate in key order, so this dump is canonical.
  return j.dump();
}

std::string config_hash(const Config& cfg) {
  const std::uint64_t h = fnv1a64(config_to_json_text(cfg));
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

}  // namespace nest
