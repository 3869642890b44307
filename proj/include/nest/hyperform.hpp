#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nest/config.hpp"
#include "nest/nn.hpp"

namespace nest {

// Deterministic rewiring noise: eta for entry (i, j) is keyed by the agent's
// id (not its row position) so permuting rows permutes eta identically, and
// by the training step when resampling per pass.
struct RewireKeys {
  std::uint64_t seed = 0;
  std::string scenario_id;
  std::uint64_t step = 0;  // 0 in eval mode or when resampling is disabled
};

Tensor rewire_eta(const RewireKeys& keys, const std::vector<std::string>& agent_ids, int s);

// Vertex-hyperedge affinity: C_ij = sigmoid(<F_i, p_j> / sqrt(d)). Masked
// rows are zeroed.
Node compute_affinity(Tape& tape, Node vertices, Node prototypes,
                      const std::vector<std::uint8_t>& valid);

// Per-vertex threshold alpha in (0,1) from the rows of C (two MLP layers +
// sigmoid), and the scene-level connection probability beta in (0,1) from
// the masked mean of agent features.
Node modulate_threshold(Tape& tape, const NodeMap& params, const Config& cfg, Node clustering);
Node modulate_connection(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices,
                         const std::vector<std::uint8_t>& valid);

// hard_ij = 1 iff C_ij >= alpha_i (inclusive threshold), alpha broadcast
// across hyperedges.
Tensor binarize(const Tensor& clustering, const Tensor& alpha);

// Adds membership in hyperedge argmax_j C_ij for any valid vertex whose row
// is empty. Runs before rewiring so E stays monotone in beta.
Tensor force_membership(const Tensor& hard, const Tensor& clustering,
                        const std::vector<std::uint8_t>& valid);

// Newman-Watts style shortcuts: entries already on stay on; off entries turn
// on where eta_ij <= beta (or, in threshold mode, where beta >= 0.5). Masked
// rows stay zero. Rewiring only ever adds connections.
Tensor rewire(const Tensor& hard, double beta, const Tensor& eta,
              const std::vector<std::uint8_t>& valid, bool threshold_mode = false);

struct HyperformOut {
  Node clustering;  // C, (n+1) x s
  Node alpha;       // (n+1) x 1
  Node beta;        // 1 x 1 (constant when the beta path is off)
  Node incidence;   // straight-through E, values in {0,1}
  Tensor hard;             // thresholded incidence before forcing/rewiring
  Tensor final_incidence;  // E
  Tensor soft_incidence;   // sigmoid((C - alpha) / tau_e), masked rows zero
};

std::vector<ParamSpec> hyperform_param_specs(const Config& cfg);

// Full Omega(V, alpha, beta) composition. The straight-through incidence
// carries gradient via the soft relaxation on thresholded/forced entries and
// via beta on rewired-on entries.
HyperformOut form_hypergraph(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices,
                             const std::vector<std::uint8_t>& valid,
                             const std::vector<std::string>& agent_ids, const RewireKeys& keys,
                             bool training);

}  // namespace nest
