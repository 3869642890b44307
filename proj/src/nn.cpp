#include "nest/nn.hpp"

#include <cmath>
#include <sstream>

#include "nest/errors.hpp"

namespace nest {

Activation activation_from_name(const std::string& name) {
  if (name == "none") return Activation::kNone;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw UsageError("unknown activation: " + name);
}

namespace {

Node apply_activation(Tape& tape, Node x, Activation act) {
  switch (act) {
    case Activation::kNone: return x;
    case Activation::kTanh: return tape.tanh(x);
    case Activation::kRelu: return tape.relu(x);
    case Activation::kSigmoid: return tape.sigmoid(x);
  }
  return x;
}

}  // namespace

std::vector<ParamSpec> mlp_param_specs(const std::string& prefix, const MlpSpec& spec) {
  if (spec.sizes.size() < 2) throw UsageError("mlp needs at least input and output sizes");
  std::vector<ParamSpec> out;
  for (std::size_t l = 0; l + 1 < spec.sizes.size(); ++l) {
    const int in = spec.sizes[l];
    const int width = spec.sizes[l + 1];
    out.push_back({prefix + ".w" + std::to_string(l), in, width, in});
    out.push_back({prefix + ".b" + std::to_string(l), 1, width, in});
  }
  return out;
}

Node mlp_forward(Tape& tape, const NodeMap& params, const std::string& prefix,
                 const MlpSpec& spec, Node x) {
  Node h = x;
  for (std::size_t l = 0; l + 1 < spec.sizes.size(); ++l) {
    const int in = spec.sizes[l];
    if (tape.val(h).cols() != in) {
      std::ostringstream os;
      os << "mlp " << prefix << " layer " << l << ": input has last dim "
         << tape.val(h).cols() << ", expected " << in;
      throw ShapeError(os.str());
    }
    const Node w = params.at(prefix + ".w" + std::to_string(l));
    const Node b = params.at(prefix + ".b" + std::to_string(l));
    h = tape.add(tape.matmul(h, w), b);
    const bool last = l + 2 == spec.sizes.size();
    h = apply_activation(tape, h, last ? spec.final_act : spec.hidden_act);
  }
  return h;
}

Node softmax(Tape& tape, Node x, double tau) { return tape.softmax_rows(x, tau); }

double gumbel_from_uniform(double u) { return -std::log(-std::log(u)); }

Tensor sample_gumbel(int rows, int cols, RngStream& rng) {
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = gumbel_from_uniform(rng.uniform_open());
  return t;
}

Node attend(Tape& tape, Node q, Node keys, Node values) {
  const int d = tape.val(keys).cols();
  Node scores = tape.matmul(q, tape.transpose(keys)) * (1.0 / std::sqrt(static_cast<double>(d)));
  Node w = tape.softmax_rows(scores, 1.0);
  return tape.matmul(w, values);
}

bool GradCheckReport::all_below(double tol) const {
  if (encountered_non_finite) return false;
  for (const auto& e : entries) {
    if (e.max_rel_err >= tol) return false;
  }
  return true;
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << e.name << ": max_rel_err=" << e.max_rel_err << " (analytic=" << e.analytic_at_max
       << ", numeric=" << e.numeric_at_max << ")" << (e.non_finite ? " [non-finite]" : "") << "\n";
  }
  return os.str();
}

GradCheckReport grad_check(const ScalarFn& f, ParamStore& params, double eps) {
  if (!(eps > 0.0)) throw UsageError("grad_check eps must be positive");

  // One analytic pass.
  std::map<std::string, Tensor> analytic;
  {
    Tape tape;
    NodeMap leaves = params.make_leaves(tape);
    Node loss = f(tape, leaves);
    tape.backward(loss);
    for (const auto& [name, node] : leaves) {
      const Tensor& g = tape.grad(node);
      analytic.emplace(name, g.size() > 0 ? g : Tensor(tape.val(node).rows(), tape.val(node).cols()));
    }
  }

  auto eval = [&]() {
    Tape tape;
    NodeMap leaves = params.make_leaves(tape);
    return tape.val(f(tape, leaves)).scalar_value();
  };

  GradCheckReport report;
  for (const auto& [name, grad] : analytic) {
    GradCheckEntry entry;
    entry.name = name;
    Tensor& t = params.mutable_get(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      double numeric = 0.0;
      try {
        t[i] = saved + eps;
        const double up = eval();
        t[i] = saved - eps;
        const double down = eval();
        numeric = (up - down) / (2.0 * eps);
      } catch (const NumericError&) {
        entry.non_finite = true;
        report.encountered_non_finite = true;
        t[i] = saved;
        continue;
      }
      t[i] = saved;
      const double a = grad[i];
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.analytic_at_max = a;
        entry.numeric_at_max = numeric;
      }
    }
    report.worst = std::max(report.worst, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace nest
