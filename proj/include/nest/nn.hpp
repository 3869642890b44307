#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nest/param_store.hpp"
#include "nest/rng.hpp"
#include "nest/tape.hpp"

namespace nest {

enum class Activation { kNone, kTanh, kRelu, kSigmoid };

Activation activation_from_name(const std::string& name);

// Row-wise multilayer perceptron. sizes = {in, h0, ..., out}; hidden layers
// use hidden_act, the output layer uses final_act.
struct MlpSpec {
  std::vector<int> sizes;
  Activation hidden_act = Activation::kTanh;
  Activation final_act = Activation::kNone;
};

// Parameter names are "<prefix>.w<i>" / "<prefix>.b<i>" per layer.
std::vector<ParamSpec> mlp_param_specs(const std::string& prefix, const MlpSpec& spec);

// x is (rows x in); returns (rows x out). Raises ShapeError naming the layer
// whose input width disagrees.
Node mlp_forward(Tape& tape, const NodeMap& params, const std::string& prefix,
                 const MlpSpec& spec, Node x);

// Thin wrapper over the tape op; x is treated row-wise.
Node softmax(Tape& tape, Node x, double tau);

// Standard Gumbel via -log(-log(u)), u uniform on (0, 1).
double gumbel_from_uniform(double u);
Tensor sample_gumbel(int rows, int cols, RngStream& rng);

// Single-query scaled dot-product attention: softmax(q K^T / sqrt(d)) V.
// q is (1 x d), keys/values are (L x d); returns (1 x d).
Node attend(Tape& tape, Node q, Node keys, Node values);

// --- gradient checking -----------------------------------------------------

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double analytic_at_max = 0.0;
  double numeric_at_max = 0.0;
  bool non_finite = false;  // loss went non-finite while probing this tensor
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst = 0.0;
  bool encountered_non_finite = false;
  bool all_below(double tol) const;
  std::string summary() const;
};

// Builds the scalar loss from parameter leaves on a fresh tape.
using ScalarFn = std::function<Node(Tape&, const NodeMap&)>;

// Central differences per parameter element vs one analytic backward pass.
// Relative error uses |a - n| / max(|a| + |n|, 1e-6).
GradCheckReport grad_check(const ScalarFn& f, ParamStore& params, double eps);

}  // namespace nest
