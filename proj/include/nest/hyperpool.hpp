#pragma once

#include <vector>

#include "nest/config.hpp"
#include "nest/nn.hpp"

namespace nest {

// Gumbel noise per pooling iteration (s x K each) for intention sampling
// during training; empty = deterministic eval (noise 0).
using GumbelPerIteration = std::vector<Tensor>;

std::vector<ParamSpec> hyperpool_param_specs(const Config& cfg);

// Membership weights lambda: softmax over each hyperedge's members of a
// shared scalar scorer on the vertex feature. Non-members get weight zero;
// an empty hyperedge yields a zero column. (n+1) x s.
Node member_weights(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices,
                    Node incidence, const std::vector<std::uint8_t>& valid);

// I_a per hyperedge: weighted sum of member vertex features, s x d.
Node aggregate_group(Tape& tape, Node weights, Node vertices);

Node encode_personality(Tape& tape, const NodeMap& params, const Config& cfg, Node aggregated);

// I_i = softmax((M_i(I_a) + xi) / tau) row-wise; xi == nullptr means eval
// mode (no noise). s x K on the simplex.
Node encode_intentions(Tape& tape, const NodeMap& params, const Config& cfg, Node aggregated,
                       const Tensor* gumbel_noise);

// I_w = sigmoid(M_w(I_a)), each willingness in (0,1). s x K.
Node encode_willingness(Tape& tape, const NodeMap& params, const Config& cfg, Node aggregated);

// F_g = I_p * sum_j I_i[j] I_w[j] (the expected willingness scales the
// personality vector). s x d.
Node group_feature(Tape& tape, Node personality, Node intentions, Node willingness);

// V_i <- M_v([V_i, sum_{j: E_ij=1} F_g,j]); masked rows are zeroed after the
// update. (n+1) x d.
Node scatter_to_vertices(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices,
                         Node incidence, Node group);

struct PoolOut {
  Node f_interaction;  // 1 x d
  Node vertices;       // final updated vertex features
};

// H iterations of V2E + E2V over a fixed incidence, then the masked mean of
// the updated vertex features.
PoolOut pool(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices, Node incidence,
             const std::vector<std::uint8_t>& valid, const GumbelPerIteration& noise);

// hypergraph-off ablation: pairwise message passing over the complete graph
// of valid agents (no self-loops), same scorer/personality/vertex encoders.
PoolOut pool_complete_graph(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices,
                            const std::vector<std::uint8_t>& valid);

}  // namespace nest
