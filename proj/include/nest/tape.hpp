#pragma once

#include <string>
#include <vector>

#include "nest/tensor.hpp"

namespace nest {

class Tape;

// Cheap handle to a node recorded on a Tape.
class Node {
 public:
  Node() = default;
  const Tensor& val() const;
  const Tensor& grad() const;
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Node(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode autodiff over a fixed op vocabulary. Ops evaluate eagerly and
// record enough to run one backward pass; inputs always precede outputs, so
// a reverse sweep over node ids is a valid topological order. Every op checks
// its output for non-finite values and raises NumericError instead of letting
// NaN/Inf propagate.
class Tape {
 public:
  Node leaf(Tensor v);      // gradient is tracked
  Node constant(Tensor v);  // gradient is not tracked
  Node scalar(double v) { return constant(Tensor::scalar(v)); }

  // Elementwise binary ops. Shapes must match, or a dimension of one operand
  // may be 1 (row, column or full scalar broadcast); gradients sum-reduce
  // over broadcast dimensions.
  Node add(Node a, Node b);
  Node sub(Node a, Node b);
  Node mul(Node a, Node b);
  Node div(Node a, Node b);

  Node matmul(Node a, Node b);
  Node transpose(Node a);

  Node reshape(Node a, int rows, int cols);
  Node concat_cols(Node a, Node b);
  Node concat_rows(Node a, Node b);
  Node row(Node a, int r);
  Node cols(Node a, int c0, int c1);  // half-open [c0, c1)
  Node element(Node a, int r, int c);

  Node neg(Node a);
  Node relu(Node a);
  Node tanh(Node a);
  Node sigmoid(Node a);
  Node exp(Node a);
  Node log(Node a);
  Node abs(Node a);
  Node sin(Node a);
  Node softplus(Node a);

  Node sum(Node a);   // 1x1
  Node mean(Node a);  // 1x1

  // Row-wise softmax of x / tau. tau must be positive.
  Node softmax_rows(Node a, double tau);

  // Straight-through estimator: forward value is `hard`, gradient passes to
  // `soft` unchanged. Shapes must match.
  Node straight_through(Node soft, Tensor hard);

  // Accumulates gradients of `loss` (must be 1x1) into every node that
  // requires a gradient. Resets previous gradients first.
  void backward(Node loss);

  const Tensor& val(Node n) const;
  const Tensor& grad(Node n) const;
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  enum class Op {
    kLeaf, kConst, kAdd, kSub, kMul, kDiv, kMatmul, kTranspose, kReshape,
    kConcatCols, kConcatRows, kRow, kCols, kElement, kNeg, kRelu, kTanh,
    kSigmoid, kExp, kLog, kAbs, kSin, kSoftplus, kSum, kMean, kSoftmaxRows,
    kStraightThrough,
  };

  struct NodeRec {
    Op op;
    int a = -1;
    int b = -1;
    Tensor val;
    Tensor grad;  // allocated by backward() for nodes that require it
    bool requires_grad = false;
    double aux = 0.0;  // softmax temperature
    int i0 = 0, i1 = 0;  // slice / split bookkeeping
  };

  Node record(Op op, Tensor val, int a, int b, double aux = 0.0, int i0 = 0, int i1 = 0);
  const NodeRec& rec(Node n) const;
  void backprop(int id);

  static const char* op_name(Op op);

  std::vector<NodeRec> nodes_;
};

// Operator sugar; both operands must live on the same tape.
Node operator+(Node a, Node b);
Node operator-(Node a, Node b);
Node operator*(Node a, Node b);
Node operator/(Node a, Node b);
Node operator*(Node a, double s);
Node operator*(double s, Node a);
Node operator+(Node a, double s);
Node operator-(Node a, double s);

}  // namespace nest
