#include "nest/hyperpool.hpp"

#include <algorithm>
#include <cmath>

#include "nest/errors.hpp"

namespace nest {

namespace {

MlpSpec scorer_spec(const Config& cfg) { return MlpSpec{{cfg.d, cfg.d, 1}}; }
MlpSpec personality_spec(const Config& cfg) { return MlpSpec{{cfg.d, cfg.d, cfg.d}}; }
MlpSpec intention_spec(const Config& cfg) {
  return MlpSpec{{cfg.d, cfg.d, cfg.effective_modes()}};
}
MlpSpec willingness_spec(const Config& cfg) {
  return MlpSpec{{cfg.d, cfg.d, cfg.effective_modes()}, Activation::kTanh, Activation::kSigmoid};
}
MlpSpec vertex_spec(const Config& cfg) { return MlpSpec{{2 * cfg.d, cfg.d, cfg.d}}; }

Tensor valid_column(const std::vector<std::uint8_t>& valid) {
  Tensor col(static_cast<int>(valid.size()), 1);
  for (std::size_t i = 0; i < valid.size(); ++i) col.at(static_cast<int>(i), 0) = valid[i] ? 1.0 : 0.0;
  return col;
}

Tensor masked_mean_weights(const std::vector<std::uint8_t>& valid) {
  int count = 0;
  for (std::uint8_t v : valid) count += v ? 1 : 0;
  if (count == 0) throw UsageError("masked mean over zero valid agents");
  Tensor w(1, static_cast<int>(valid.size()));
  for (std::size_t i = 0; i < valid.size(); ++i) {
    w.at(0, static_cast<int>(i)) = valid[i] ? 1.0 / count : 0.0;
  }
  return w;
}

// Detached shift constant for the masked softmax; softmax weights are
// shift-invariant so this only guards exp overflow.
double max_valid_score(const Tensor& scores, const std::vector<std::uint8_t>& valid) {
  double m = 0.0;
  bool seen = false;
  for (int i = 0; i < scores.rows(); ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    m = seen ? std::max(m, scores.at(i, 0)) : scores.at(i, 0);
    seen = true;
  }
  return seen ? m : 0.0;
}

}  // namespace

std::vector<ParamSpec> hyperpool_param_specs(const Config& cfg) {
  std::vector<ParamSpec> specs;
  auto append = [&](const std::vector<ParamSpec>& v) {
    specs.insert(specs.end(), v.begin(), v.end());
  };
  append(mlp_param_specs("pool.scorer", scorer_spec(cfg)));
  append(mlp_param_specs("pool.personality", personality_spec(cfg)));
  if (cfg.use_hypergraph()) {
    append(mlp_param_specs("pool.intention", intention_spec(cfg)));
    append(mlp_param_specs("pool.willingness", willingness_spec(cfg)));
  }
  append(mlp_param_specs("pool.vertex", vertex_spec(cfg)));
  return specs;
}

Node member_weights(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices,
                    Node incidence, const std::vector<std::uint8_t>& valid) {
  Node scores = mlp_forward(tape, params, "pool.scorer", scorer_spec(cfg), vertices);
  const double shift = max_valid_score(tape.val(scores), valid);
  Node expz = tape.exp(tape.sub(scores, tape.scalar(shift)));  // (n+1) x 1
  Node numer = tape.mul(incidence, expz);                      // column-broadcast
  const int n_rows = tape.val(vertices).rows();
  Node denom = tape.matmul(tape.constant(Tensor::full(1, n_rows, 1.0)), numer);  // 1 x s
  // Guard empty hyperedges: their denominator is exactly zero, make it one.
  const Tensor& dv = tape.val(denom);
  Tensor guard(1, dv.cols());
  for (int j = 0; j < dv.cols(); ++j) guard.at(0, j) = dv.at(0, j) == 0.0 ? 1.0 : 0.0;
  denom = tape.add(denom, tape.constant(std::move(guard)));
  return tape.div(numer, denom);
}

Node aggregate_group(Tape& tape, Node weights, Node vertices) {
  return tape.matmul(tape.transpose(weights), vertices);
}

Node encode_personality(Tape& tape, const NodeMap& params, const Config& cfg, Node aggregated) {
  return mlp_forward(tape, params, "pool.personality", personality_spec(cfg), aggregated);
}

Node encode_intentions(Tape& tape, const NodeMap& params, const Config& cfg, Node aggregated,
                       const Tensor* gumbel_noise) {
  Node logits = mlp_forward(tape, params, "pool.intention", intention_spec(cfg), aggregated);
  if (gumbel_noise != nullptr) {
    logits = tape.add(logits, tape.constant(*gumbel_noise));
  }
  return tape.softmax_rows(logits, cfg.tau);
}

Node encode_willingness(Tape& tape, const NodeMap& params, const Config& cfg, Node aggregated) {
  return mlp_forward(tape, params, "pool.willingness", willingness_spec(cfg), aggregated);
}

Node group_feature(Tape& tape, Node personality, Node intentions, Node willingness) {
  const int k = intentions.val().cols();
  Node expected = tape.matmul(tape.mul(intentions, willingness),
                              tape.constant(Tensor::full(k, 1, 1.0)));  // s x 1
  return tape.mul(personality, expected);
}

Node scatter_to_vertices(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices,
                         Node incidence, Node group) {
  Node gathered = tape.matmul(incidence, group);  // (n+1) x d
  Node updated = mlp_forward(tape, params, "pool.vertex", vertex_spec(cfg),
                             tape.concat_cols(vertices, gathered));
  return updated;
}

PoolOut pool(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices, Node incidence,
             const std::vector<std::uint8_t>& valid, const GumbelPerIteration& noise) {
  Node v = vertices;
  const Node mask = tape.constant(valid_column(valid));
  for (int h = 0; h < cfg.h_iters; ++h) {
    Node weights = member_weights(tape, params, cfg, v, incidence, valid);
    Node aggregated = aggregate_group(tape, weights, v);
    Node personality = encode_personality(tape, params, cfg, aggregated);
    const Tensor* xi = h < static_cast<int>(noise.size()) ? &noise[static_cast<std::size_t>(h)]
                                                          : nullptr;
    Node intentions = encode_intentions(tape, params, cfg, aggregated, xi);
    Node willingness = encode_willingness(tape, params, cfg, aggregated);
    Node group = group_feature(tape, personality, intentions, willingness);
    v = tape.mul(scatter_to_vertices(tape, params, cfg, v, incidence, group), mask);
  }
  PoolOut out;
  out.vertices = v;
  out.f_interaction = tape.matmul(tape.constant(masked_mean_weights(valid)), v);
  return out;
}

PoolOut pool_complete_graph(Tape& tape, const NodeMap& params, const Config& cfg, Node vertices,
                            const std::vector<std::uint8_t>& valid) {
  const int n = static_cast<int>(valid.size());
  // Pairwise adjacency over valid agents, self-loops excluded.
  Tensor adj(n, n);
  for (int i = 0; i < n; ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    for (int j = 0; j < n; ++j) {
      if (i != j && valid[static_cast<std::size_t>(j)]) adj.at(i, j) = 1.0;
    }
  }
  const Node mask = tape.constant(valid_column(valid));
  Node v = vertices;
  for (int h = 0; h < cfg.h_iters; ++h) {
    Node scores = mlp_forward(tape, params, "pool.scorer", scorer_spec(cfg), v);
    const double shift = max_valid_score(tape.val(scores), valid);
    Node expz = tape.transpose(tape.exp(tape.sub(scores, tape.scalar(shift))));  // 1 x n
    Node numer = tape.mul(tape.constant(adj), expz);  // row-broadcast over receivers
    Node denom = tape.matmul(numer, tape.constant(Tensor::full(n, 1, 1.0)));  // n x 1
    const Tensor& dv = tape.val(denom);
    Tensor guard(n, 1);
    for (int i = 0; i < n; ++i) guard.at(i, 0) = dv.at(i, 0) == 0.0 ? 1.0 : 0.0;
    Node weights = tape.div(numer, tape.add(denom, tape.constant(std::move(guard))));
    Node message = encode_personality(tape, params, cfg, tape.matmul(weights, v));
    Node updated = mlp_forward(tape, params, "pool.vertex", vertex_spec(cfg),
                               tape.concat_cols(v, message));
    v = tape.mul(updated, mask);
  }
  PoolOut out;
  out.vertices = v;
  out.f_interaction = tape.matmul(tape.constant(masked_mean_weights(valid)), v);
  return out;
}

}  // namespace nest
