#pragma once

#include <cstdint>
#include <string>

namespace nest {

// One flag per ablation row; all on = the full model.
struct AblationFlags {
  bool neuromodulator = true;
  bool small_world = true;
  bool hypergraph = true;
  bool context_fusion = true;
  bool multimodal = true;
};

struct Config {
  int d = 32;        // feature width
  int s = 8;         // hyperedge count
  int k_modes = 5;   // intention / prediction modes (K)
  int h_iters = 3;   // pooling iterations (H)
  int t_h = 8;       // history steps
  int t_f = 12;      // future steps
  double tau = 1.0;    // intention softmax temperature
  double tau_e = 0.5;  // soft-incidence relaxation temperature
  int h_neuro = 16;    // neuromodulator hidden width

  double lr = 0.01;
  double momentum = 0.0;
  int steps = 1000;
  int batch = 8;
  std::uint64_t seed = 1;
  double c_cls = 0.5;  // mode classification loss weight
  int ckpt_every = 0;  // 0 = final checkpoint only

  std::string eval_rewire = "sample";  // "sample" | "threshold"
  bool rewire_resample = true;         // fresh eta per training pass
  std::string scale_param = "exp";     // "exp" | "softplus" for Laplace scales
  int gen_hidden = 64;                 // generator / prob head hidden width

  double lane_segment_len = 20.0;  // metres per lane segment
  int lane_points = 10;            // resampled points per segment

  // Frozen values used when the neuromodulator is ablated.
  double alpha_const = 0.5;
  double beta_const = 0.5;

  AblationFlags ablation;

  int effective_modes() const { return ablation.multimodal ? k_modes : 1; }
  bool use_hypergraph() const { return ablation.hypergraph; }
  bool use_small_world() const { return ablation.hypergraph && ablation.small_world; }
  bool use_neuromodulator() const { return ablation.hypergraph && ablation.neuromodulator; }

  void validate() const;  // UsageError on out-of-range fields
};

// JSON round-trip. Parsing rejects unknown keys so typos in config files
// fail loudly. The hash is over the canonical serialized form and is what
// checkpoints embed.
Config config_from_json_text(const std::string& text);
std::string config_to_json_text(const Config& cfg);
std::string config_hash(const Config& cfg);
Config load_config_file(const std::string& path);

}  // namespace nest
