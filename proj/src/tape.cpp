#include "nest/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nest/errors.hpp"

namespace nest {

namespace {

// Resolved broadcast description for elementwise binary ops.
struct Broadcast {
  int rows, cols;
  bool a_row1, a_col1, b_row1, b_col1;
};

Broadcast resolve_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  auto combine = [&](int x, int y) {
    if (x == y) return x;
    if (x == 1) return y;
    if (y == 1) return x;
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " +
                     b.shape_str());
  };
  Broadcast bc{};
  bc.rows = combine(a.rows(), b.rows());
  bc.cols = combine(a.cols(), b.cols());
  bc.a_row1 = a.rows() == 1;
  bc.a_col1 = a.cols() == 1;
  bc.b_row1 = b.rows() == 1;
  bc.b_col1 = b.cols() == 1;
  return bc;
}

template <typename F>
Tensor apply_binary(const Tensor& a, const Tensor& b, const char* op, F f) {
  const Broadcast bc = resolve_broadcast(a, b, op);
  Tensor out(bc.rows, bc.cols);
  for (int i = 0; i < bc.rows; ++i) {
    for (int j = 0; j < bc.cols; ++j) {
      out.at(i, j) = f(a.at(bc.a_row1 ? 0 : i, bc.a_col1 ? 0 : j),
                       b.at(bc.b_row1 ? 0 : i, bc.b_col1 ? 0 : j));
    }
  }
  return out;
}

template <typename F>
Tensor apply_unary(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

Tensor matmul_value(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() + " * " +
                     b.shape_str());
  }
  Tensor out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) {
        out.at(i, j) += aik * b.at(k, j);
      }
    }
  }
  return out;
}

Tensor transpose_value(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  }
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

double stable_softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace

const Tensor& Node::val() const { return tape_->val(*this); }
const Tensor& Node::grad() const { return tape_->grad(*this); }

const Tape::NodeRec& Tape::rec(Node n) const {
  if (n.tape() != this || n.id() < 0 || n.id() >= static_cast<int>(nodes_.size())) {
    throw UsageError("node does not belong to this tape");
  }
  return nodes_[static_cast<std::size_t>(n.id())];
}

const Tensor& Tape::val(Node n) const { return rec(n).val; }

const Tensor& Tape::grad(Node n) const {
  static const Tensor kEmpty;
  const NodeRec& r = rec(n);
  return r.grad.size() > 0 ? r.grad : kEmpty;
}

Node Tape::record(Op op, Tensor val, int a, int b, double aux, int i0, int i1) {
  if (!val.all_finite()) {
    throw NumericError(std::string(op_name(op)) + " produced non-finite values");
  }
  NodeRec r;
  r.op = op;
  r.a = a;
  r.b = b;
  r.val = std::move(val);
  r.aux = aux;
  r.i0 = i0;
  r.i1 = i1;
  const bool a_req = a >= 0 && nodes_[static_cast<std::size_t>(a)].requires_grad;
  const bool b_req = b >= 0 && nodes_[static_cast<std::size_t>(b)].requires_grad;
  r.requires_grad = op == Op::kLeaf || a_req || b_req;
  nodes_.push_back(std::move(r));
  return Node(this, static_cast<int>(nodes_.size()) - 1);
}

Node Tape::leaf(Tensor v) { return record(Op::kLeaf, std::move(v), -1, -1); }
Node Tape::constant(Tensor v) { return record(Op::kConst, std::move(v), -1, -1); }

Node Tape::add(Node a, Node b) {
  return record(Op::kAdd, apply_binary(val(a), val(b), "add", [](double x, double y) { return x + y; }),
                a.id(), b.id());
}

Node Tape::sub(Node a, Node b) {
  return record(Op::kSub, apply_binary(val(a), val(b), "sub", [](double x, double y) { return x - y; }),
                a.id(), b.id());
}

Node Tape::mul(Node a, Node b) {
  return record(Op::kMul, apply_binary(val(a), val(b), "mul", [](double x, double y) { return x * y; }),
                a.id(), b.id());
}

Node Tape::div(Node a, Node b) {
  return record(Op::kDiv, apply_binary(val(a), val(b), "div", [](double x, double y) { return x / y; }),
                a.id(), b.id());
}

Node Tape::matmul(Node a, Node b) {
  return record(Op::kMatmul, matmul_value(val(a), val(b)), a.id(), b.id());
}

Node Tape::transpose(Node a) {
  return record(Op::kTranspose, transpose_value(val(a)), a.id(), -1);
}

Node Tape::reshape(Node a, int rows, int cols) {
  const Tensor& v = val(a);
  if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != v.size()) {
    throw ShapeError("reshape: cannot view " + v.shape_str() + " as " + std::to_string(rows) +
                     "x" + std::to_string(cols));
  }
  return record(Op::kReshape, Tensor(rows, cols, v.data()), a.id(), -1);
}

Node Tape::concat_cols(Node a, Node b) {
  const Tensor& x = val(a);
  const Tensor& y = val(b);
  if (x.rows() != y.rows()) {
    throw ShapeError("concat_cols: row counts disagree, " + x.shape_str() + " vs " + y.shape_str());
  }
  Tensor out(x.rows(), x.cols() + y.cols());
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(i, j);
    for (int j = 0; j < y.cols(); ++j) out.at(i, x.cols() + j) = y.at(i, j);
  }
  return record(Op::kConcatCols, std::move(out), a.id(), b.id(), 0.0, x.cols());
}

Node Tape::concat_rows(Node a, Node b) {
  const Tensor& x = val(a);
  const Tensor& y = val(b);
  if (x.cols() != y.cols()) {
    throw ShapeError("concat_rows: column counts disagree, " + x.shape_str() + " vs " + y.shape_str());
  }
  Tensor out(x.rows() + y.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(i, j);
  for (int i = 0; i < y.rows(); ++i)
    for (int j = 0; j < y.cols(); ++j) out.at(x.rows() + i, j) = y.at(i, j);
  return record(Op::kConcatRows, std::move(out), a.id(), b.id(), 0.0, x.rows());
}

Node Tape::row(Node a, int r) {
  const Tensor& v = val(a);
  if (r < 0 || r >= v.rows()) {
    throw ShapeError("row: index " + std::to_string(r) + " out of range for " + v.shape_str());
  }
  Tensor out(1, v.cols());
  for (int j = 0; j < v.cols(); ++j) out.at(0, j) = v.at(r, j);
  return record(Op::kRow, std::move(out), a.id(), -1, 0.0, r);
}

Node Tape::cols(Node a, int c0, int c1) {
  const Tensor& v = val(a);
  if (c0 < 0 || c1 > v.cols() || c0 >= c1) {
    throw ShapeError("cols: bad slice [" + std::to_string(c0) + ", " + std::to_string(c1) +
                     ") for " + v.shape_str());
  }
  Tensor out(v.rows(), c1 - c0);
  for (int i = 0; i < v.rows(); ++i)
    for (int j = c0; j < c1; ++j) out.at(i, j - c0) = v.at(i, j);
  return record(Op::kCols, std::move(out), a.id(), -1, 0.0, c0, c1);
}

Node Tape::element(Node a, int r, int c) {
  const Tensor& v = val(a);
  if (r < 0 || r >= v.rows() || c < 0 || c >= v.cols()) {
    throw ShapeError("element: (" + std::to_string(r) + "," + std::to_string(c) +
                     ") out of range for " + v.shape_str());
  }
  return record(Op::kElement, Tensor::scalar(v.at(r, c)), a.id(), -1, 0.0, r, c);
}

Node Tape::neg(Node a) {
  return record(Op::kNeg, apply_unary(val(a), [](double x) { return -x; }), a.id(), -1);
}

Node Tape::relu(Node a) {
  return record(Op::kRelu, apply_unary(val(a), [](double x) { return x > 0 ? x : 0.0; }), a.id(), -1);
}

Node Tape::tanh(Node a) {
  return record(Op::kTanh, apply_unary(val(a), [](double x) { return std::tanh(x); }), a.id(), -1);
}

Node Tape::sigmoid(Node a) {
  return record(Op::kSigmoid, apply_unary(val(a), stable_sigmoid), a.id(), -1);
}

Node Tape::exp(Node a) {
  return record(Op::kExp, apply_unary(val(a), [](double x) { return std::exp(x); }), a.id(), -1);
}

Node Tape::log(Node a) {
  return record(Op::kLog, apply_unary(val(a), [](double x) { return std::log(x); }), a.id(), -1);
}

Node Tape::abs(Node a) {
  return record(Op::kAbs, apply_unary(val(a), [](double x) { return std::abs(x); }), a.id(), -1);
}

Node Tape::sin(Node a) {
  return record(Op::kSin, apply_unary(val(a), [](double x) { return std::sin(x); }), a.id(), -1);
}

Node Tape::softplus(Node a) {
  return record(Op::kSoftplus, apply_unary(val(a), stable_softplus), a.id(), -1);
}

Node Tape::sum(Node a) {
  double s = 0;
  for (double v : val(a).data()) s += v;
  return record(Op::kSum, Tensor::scalar(s), a.id(), -1);
}

Node Tape::mean(Node a) {
  const Tensor& v = val(a);
  if (v.size() == 0) throw ShapeError("mean of empty tensor");
  double s = 0;
  for (double x : v.data()) s += x;
  return record(Op::kMean, Tensor::scalar(s / static_cast<double>(v.size())), a.id(), -1);
}

Node Tape::softmax_rows(Node a, double tau) {
  if (!(tau > 0.0)) {
    throw UsageError("softmax temperature must be positive, got " + std::to_string(tau));
  }
  const Tensor& v = val(a);
  Tensor out(v.rows(), v.cols());
  for (int i = 0; i < v.rows(); ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < v.cols(); ++j) m = std::max(m, v.at(i, j));
    double denom = 0;
    for (int j = 0; j < v.cols(); ++j) {
      const double e = std::exp((v.at(i, j) - m) / tau);
      out.at(i, j) = e;
      denom += e;
    }
    for (int j = 0; j < v.cols(); ++j) out.at(i, j) /= denom;
  }
  return record(Op::kSoftmaxRows, std::move(out), a.id(), -1, tau);
}

Node Tape::straight_through(Node soft, Tensor hard) {
  if (!val(soft).same_shape(hard)) {
    throw ShapeError("straight_through: shapes disagree, " + val(soft).shape_str() + " vs " +
                     hard.shape_str());
  }
  return record(Op::kStraightThrough, std::move(hard), soft.id(), -1);
}

void Tape::backward(Node loss) {
  const NodeRec& lr = rec(loss);
  if (lr.val.rows() != 1 || lr.val.cols() != 1) {
    throw UsageError("backward requires a scalar loss, got " + lr.val.shape_str());
  }
  for (auto& n : nodes_) {
    if (n.requires_grad) {
      n.grad = Tensor(n.val.rows(), n.val.cols());
    } else {
      n.grad = Tensor();
    }
  }
  auto& lrec = nodes_[static_cast<std::size_t>(loss.id())];
  if (!lrec.requires_grad) return;  // loss does not depend on any leaf
  lrec.grad[0] = 1.0;
  for (int id = loss.id(); id >= 0; --id) backprop(id);
}

// Accumulate grad(parent) += vjp for one node. `g` below is the node's own
// cotangent; broadcast binary ops sum-reduce into broadcast operands.
void Tape::backprop(int id) {
  NodeRec& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad || n.grad.size() == 0) return;
  const Tensor& g = n.grad;

  auto parent = [&](int pid) -> NodeRec& { return nodes_[static_cast<std::size_t>(pid)]; };
  auto wants = [&](int pid) { return pid >= 0 && parent(pid).requires_grad; };

  auto accum_broadcast = [&](int pid, auto weight_fn) {
    if (!wants(pid)) return;
    NodeRec& p = parent(pid);
    const bool row1 = p.val.rows() == 1;
    const bool col1 = p.val.cols() == 1;
    for (int i = 0; i < g.rows(); ++i) {
      for (int j = 0; j < g.cols(); ++j) {
        p.grad.at(row1 ? 0 : i, col1 ? 0 : j) += g.at(i, j) * weight_fn(i, j);
      }
    }
  };

  switch (n.op) {
    case Op::kLeaf:
    case Op::kConst:
      return;
    case Op::kAdd:
      accum_broadcast(n.a, [](int, int) { return 1.0; });
      accum_broadcast(n.b, [](int, int) { return 1.0; });
      return;
    case Op::kSub:
      accum_broadcast(n.a, [](int, int) { return 1.0; });
      accum_broadcast(n.b, [](int, int) { return -1.0; });
      return;
    case Op::kMul: {
      const Tensor& av = parent(n.a).val;
      const Tensor& bv = parent(n.b).val;
      accum_broadcast(n.a, [&](int i, int j) {
        return bv.at(bv.rows() == 1 ? 0 : i, bv.cols() == 1 ? 0 : j);
      });
      accum_broadcast(n.b, [&](int i, int j) {
        return av.at(av.rows() == 1 ? 0 : i, av.cols() == 1 ? 0 : j);
      });
      return;
    }
    case Op::kDiv: {
      const Tensor& av = parent(n.a).val;
      const Tensor& bv = parent(n.b).val;
      auto a_at = [&](int i, int j) { return av.at(av.rows() == 1 ? 0 : i, av.cols() == 1 ? 0 : j); };
      auto b_at = [&](int i, int j) { return bv.at(bv.rows() == 1 ? 0 : i, bv.cols() == 1 ? 0 : j); };
      accum_broadcast(n.a, [&](int i, int j) { return 1.0 / b_at(i, j); });
      accum_broadcast(n.b, [&](int i, int j) {
        const double b = b_at(i, j);
        return -a_at(i, j) / (b * b);
      });
      return;
    }
    case Op::kMatmul: {
      const Tensor& av = parent(n.a).val;
      const Tensor& bv = parent(n.b).val;
      if (wants(n.a)) {
        Tensor& ga = parent(n.a).grad;
        for (int i = 0; i < av.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) {
            const double gij = g.at(i, j);
            if (gij == 0.0) continue;
            for (int k = 0; k < av.cols(); ++k) ga.at(i, k) += gij * bv.at(k, j);
          }
      }
      if (wants(n.b)) {
        Tensor& gb = parent(n.b).grad;
        for (int i = 0; i < av.rows(); ++i)
          for (int k = 0; k < av.cols(); ++k) {
            const double aik = av.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < g.cols(); ++j) gb.at(k, j) += aik * g.at(i, j);
          }
      }
      return;
    }
    case Op::kTranspose:
      if (wants(n.a)) {
        Tensor& ga = parent(n.a).grad;
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) ga.at(j, i) += g.at(i, j);
      }
      return;
    case Op::kReshape:
      if (wants(n.a)) {
        Tensor& ga = parent(n.a).grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      return;
    case Op::kConcatCols:
      if (wants(n.a)) {
        Tensor& ga = parent(n.a).grad;
        for (int i = 0; i < ga.rows(); ++i)
          for (int j = 0; j < ga.cols(); ++j) ga.at(i, j) += g.at(i, j);
      }
      if (wants(n.b)) {
        Tensor& gb = parent(n.b).grad;
        for (int i = 0; i < gb.rows(); ++i)
          for (int j = 0; j < gb.cols(); ++j) gb.at(i, j) += g.at(i, n.i0 + j);
      }
      return;
    case Op::kConcatRows:
      if (wants(n.a)) {
        Tensor& ga = parent(n.a).grad;
        for (int i = 0; i < ga.rows(); ++i)
          for (int j = 0; j < ga.cols(); ++j) ga.at(i, j) += g.at(i, j);
      }
      if (wants(n.b)) {
        Tensor& gb = parent(n.b).grad;
        for (int i = 0; i < gb.rows(); ++i)
          for (int j = 0; j < gb.cols(); ++j) gb.at(i, j) += g.at(n.i0 + i, j);
      }
      return;
    case Op::kRow:
      if (wants(n.a)) {
        Tensor& ga = parent(n.a).grad;
        for (int j = 0; j < g.cols(); ++j) ga.at(n.i0, j) += g.at(0, j);
      }
      return;
    case Op::kCols:
      if (wants(n.a)) {
        Tensor& ga = parent(n.a).grad;
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) ga.at(i, n.i0 + j) += g.at(i, j);
      }
      return;
    case Op::kElement:
      if (wants(n.a)) parent(n.a).grad.at(n.i0, n.i1) += g[0];
      return;
    case Op::kNeg:
      accum_broadcast(n.a, [](int, int) { return -1.0; });
      return;
    case Op::kRelu: {
      const Tensor& av = parent(n.a).val;
      accum_broadcast(n.a, [&](int i, int j) { return av.at(i, j) > 0 ? 1.0 : 0.0; });
      return;
    }
    case Op::kTanh:
      accum_broadcast(n.a, [&](int i, int j) {
        const double y = n.val.at(i, j);
        return 1.0 - y * y;
      });
      return;
    case Op::kSigmoid:
      accum_broadcast(n.a, [&](int i, int j) {
        const double y = n.val.at(i, j);
        return y * (1.0 - y);
      });
      return;
    case Op::kExp:
      accum_broadcast(n.a, [&](int i, int j) { return n.val.at(i, j); });
      return;
    case Op::kLog: {
      const Tensor& av = parent(n.a).val;
      accum_broadcast(n.a, [&](int i, int j) { return 1.0 / av.at(i, j); });
      return;
    }
    case Op::kAbs: {
      const Tensor& av = parent(n.a).val;
      accum_broadcast(n.a, [&](int i, int j) {
        const double x = av.at(i, j);
        return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
      });
      return;
    }
    case Op::kSin: {
      const Tensor& av = parent(n.a).val;
      accum_broadcast(n.a, [&](int i, int j) { return std::cos(av.at(i, j)); });
      return;
    }
    case Op::kSoftplus: {
      const Tensor& av = parent(n.a).val;
      accum_broadcast(n.a, [&](int i, int j) { return stable_sigmoid(av.at(i, j)); });
      return;
    }
    case Op::kSum:
      if (wants(n.a)) {
        Tensor& ga = parent(n.a).grad;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
      }
      return;
    case Op::kMean:
      if (wants(n.a)) {
        Tensor& ga = parent(n.a).grad;
        const double w = g[0] / static_cast<double>(ga.size());
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += w;
      }
      return;
    case Op::kSoftmaxRows:
      if (wants(n.a)) {
        Tensor& ga = parent(n.a).grad;
        const double inv_tau = 1.0 / n.aux;
        for (int i = 0; i < g.rows(); ++i) {
          double dot = 0;
          for (int j = 0; j < g.cols(); ++j) dot += g.at(i, j) * n.val.at(i, j);
          for (int j = 0; j < g.cols(); ++j) {
            ga.at(i, j) += inv_tau * n.val.at(i, j) * (g.at(i, j) - dot);
          }
        }
      }
      return;
    case Op::kStraightThrough:
      if (wants(n.a)) {
        Tensor& ga = parent(n.a).grad;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
      }
      return;
  }
}

const char* Tape::op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kConst: return "constant";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kMatmul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kReshape: return "reshape";
    case Op::kConcatCols: return "concat_cols";
    case Op::kConcatRows: return "concat_rows";
    case Op::kRow: return "row";
    case Op::kCols: return "cols";
    case Op::kElement: return "element";
    case Op::kNeg: return "neg";
    case Op::kRelu: return "relu";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kAbs: return "abs";
    case Op::kSin: return "sin";
    case Op::kSoftplus: return "softplus";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kSoftmaxRows: return "softmax";
    case Op::kStraightThrough: return "straight_through";
  }
  return "?";
}

namespace {
Tape* same_tape(Node a, Node b) {
  if (a.tape() != b.tape() || a.tape() == nullptr) {
    throw UsageError("operands live on different tapes");
  }
  return a.tape();
}
}  // namespace

Node operator+(Node a, Node b) { return same_tape(a, b)->add(a, b); }
Node operator-(Node a, Node b) { return same_tape(a, b)->sub(a, b); }
Node operator*(Node a, Node b) { return same_tape(a, b)->mul(a, b); }
Node operator/(Node a, Node b) { return same_tape(a, b)->div(a, b); }
Node operator*(Node a, double s) { return a.tape()->mul(a, a.tape()->scalar(s)); }
Node operator*(double s, Node a) { return a * s; }
Node operator+(Node a, double s) { return a.tape()->add(a, a.tape()->scalar(s)); }
Node operator-(Node a, double s) { return a.tape()->sub(a, a.tape()->scalar(s)); }

}  // namespace nest
