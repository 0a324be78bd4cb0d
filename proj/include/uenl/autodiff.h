#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uenl/tensor.h"

namespace uenl {

enum class Primitive {
  kLeaf,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kScale,
  kRelu,
  kExp,
  kLn,
  kSquare,
  kSum,
  kMean,
  kMax,
  kL2Norm,
  kLogSumExp,
  kConcat,
  kReshape,
};

std::string_view PrimitiveName(Primitive primitive);

// Reduction over every element instead of a single axis.
inline constexpr int kAllAxes = -1000;

struct Attrs {
  // Reduction / concat axis. Negative values count from the back.
  int axis = kAllAxes;
  // Multiplier for kScale.
  double constant = 1.0;
  // Target shape for kReshape.
  Shape shape;
};

class Node;
using Var = std::shared_ptr<const Node>;

// One vertex of the computation graph. Nodes are immutable once built, so a
// graph can be shared across threads; backward never mutates it.
class Node {
 public:
  Node(Primitive primitive, std::vector<Var> parents, Tensor value,
       Attrs attrs, bool requires_grad);

  Primitive primitive() const { return primitive_; }
  const std::vector<Var>& parents() const { return parents_; }
  const Tensor& value() const { return value_; }
  const Shape& shape() const { return value_.shape(); }
  const Attrs& attrs() const { return attrs_; }
  bool requires_grad() const { return requires_grad_; }

 private:
  Primitive primitive_;
  std::vector<Var> parents_;
  Tensor value_;
  Attrs attrs_;
  bool requires_grad_;
};

// Trainable or differentiable input.
Var Leaf(Tensor value);
// Input excluded from differentiation.
Var Constant(Tensor value);

// Binary ops broadcast numpy-style: shapes are right-aligned and an extent of
// 1 (or a missing leading axis) stretches to match the other operand.
Var MatMul(const Var& a, const Var& b);
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Div(const Var& a, const Var& b);
Var Scale(const Var& a, double factor);
Var Relu(const Var& a);
Var Exp(const Var& a);
Var Ln(const Var& a);
Var Square(const Var& a);
Var Sum(const Var& a, int axis = kAllAxes);
Var Mean(const Var& a, int axis = kAllAxes);
Var Max(const Var& a, int axis = kAllAxes);
Var L2Norm(const Var& a, int axis = kAllAxes);
Var LogSumExp(const Var& a, int axis = kAllAxes);
Var Concat(const Var& a, const Var& b, int axis);
Var Reshape(const Var& a, Shape shape);

// Generic entry point; dispatches to the functions above.
Var Apply(Primitive primitive, std::span<const Var> inputs,
          const Attrs& attrs = {});

// Gradients of a scalar loss with respect to every reachable node that
// requires a gradient.
class Gradients {
 public:
  bool Contains(const Var& node) const;
  // Throws Error when the node is not connected to the loss.
  const Tensor& Of(const Var& node) const;
  std::size_t size() const { return grads_.size(); }

 private:
  friend Gradients Backward(const Var& loss);
  std::unordered_map<const Node*, Tensor> grads_;
};

// Reverse-mode sweep; each node is visited exactly once in reverse
// topological order and gradients of shared nodes are summed.
Gradients Backward(const Var& loss);

// Shape produced by broadcasting a against b.
Shape BroadcastShapes(const Shape& a, const Shape& b);

}  // namespace uenl
