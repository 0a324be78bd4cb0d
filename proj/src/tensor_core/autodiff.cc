#include "uenl/autodiff.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uenl/errors.h"

namespace uenl {
namespace {

// Splits a shape around one axis: elements are addressed as
// outer * (extent * inner) + j * inner + i.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
  Shape reduced;
};

AxisSplit SplitAxis(const Shape& shape, int axis, std::string_view op) {
  AxisSplit split;
  if (axis == kAllAxes) {
    split.extent = NumElements(shape);
    return split;
  }
  const int rank = static_cast<int>(shape.size());
  const int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + ShapeToString(shape));
  }
  for (int d = 0; d < rank; ++d) {
    if (d < a) split.outer *= shape[d];
    if (d > a) split.inner *= shape[d];
    if (d != a) split.reduced.push_back(shape[d]);
  }
  split.extent = shape[a];
  return split;
}

// Flat index into `in` for every element of the broadcast output shape.
std::vector<std::size_t> BroadcastIndexMap(const Shape& out, const Shape& in) {
  const std::size_t rank = out.size();
  std::vector<std::size_t> strides(rank, 0);
  std::size_t stride = 1;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const std::size_t d_in = in.size() - 1 - k;
    const std::size_t d_out = rank - 1 - k;
    strides[d_out] = in[d_in] == 1 ? 0 : stride;
    stride *= in[d_in];
  }
  const std::size_t n = NumElements(out);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> index(rank, 0);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < n; ++i) {
    map[i] = flat;
    for (std::size_t d = rank; d-- > 0;) {
      ++index[d];
      flat += strides[d];
      if (index[d] < out[d]) break;
      flat -= strides[d] * index[d];
      index[d] = 0;
    }
  }
  return map;
}

Var MakeNode(Primitive primitive, std::vector<Var> parents, Shape shape,
             std::vector<double> data, Attrs attrs = {}) {
  bool requires_grad = false;
  for (const Var& p : parents) requires_grad = requires_grad || p->requires_grad();
  try {
    Tensor value(std::move(shape), std::move(data));
    return std::make_shared<const Node>(primitive, std::move(parents),
                                        std::move(value), std::move(attrs),
                                        requires_grad);
  } catch (const NumericError& e) {
    throw NumericError(std::string(PrimitiveName(primitive)) +
                       " produced a non-finite result: " + e.what());
  }
}

void RequireNonNull(const Var& v, std::string_view op) {
  if (!v) throw Error(std::string(op) + ": null input");
}

template <typename F>
Var Binary(Primitive primitive, const Var& a, const Var& b, F f) {
  RequireNonNull(a, PrimitiveName(primitive));
  RequireNonNull(b, PrimitiveName(primitive));
  const Shape out = BroadcastShapes(a->shape(), b->shape());
  const auto& av = a->value().values();
  const auto& bv = b->value().values();
  std::vector<double> data(NumElements(out));
  if (a->shape() == out && b->shape() == out) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = f(av[i], bv[i]);
  } else {
    const auto ia = BroadcastIndexMap(out, a->shape());
    const auto ib = BroadcastIndexMap(out, b->shape());
    for (std::size_t i = 0; i < data.size(); ++i) {
      data[i] = f(av[ia[i]], bv[ib[i]]);
    }
  }
  return MakeNode(primitive, {a, b}, out, std::move(data));
}

template <typename F>
Var Unary(Primitive primitive, const Var& a, F f, Attrs attrs = {}) {
  RequireNonNull(a, PrimitiveName(primitive));
  const auto& av = a->value().values();
  std::vector<double> data(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) data[i] = f(av[i]);
  return MakeNode(primitive, {a}, a->shape(), std::move(data),
                  std::move(attrs));
}

template <typename F>
Var Reduce(Primitive primitive, const Var& a, int axis, F f) {
  RequireNonNull(a, PrimitiveName(primitive));
  const AxisSplit s = SplitAxis(a->shape(), axis, PrimitiveName(primitive));
  if (s.extent == 0 && primitive != Primitive::kSum) {
    throw ShapeError(std::string(PrimitiveName(primitive)) +
                     " over an empty axis");
  }
  const auto& av = a->value().values();
  std::vector<double> data(s.outer * s.inner);
  std::vector<double> lane(s.extent);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      for (std::size_t j = 0; j < s.extent; ++j) {
        lane[j] = av[o * s.extent * s.inner + j * s.inner + i];
      }
      data[o * s.inner + i] = f(lane);
    }
  }
  Attrs attrs;
  attrs.axis = axis;
  return MakeNode(primitive, {a}, s.reduced, std::move(data), attrs);
}

double LaneLogSumExp(const std::vector<double>& lane) {
  const double m = *std::max_element(lane.begin(), lane.end());
  double acc = 0.0;
  for (double x : lane) acc += std::exp(x - m);
  return m + std::log(acc);
}

// Accumulates `contribution` (shaped like the broadcast output) into a
// gradient buffer shaped like `target`.
void AccumulateBroadcast(const Shape& out, const Shape& target,
                         const std::vector<double>& contribution,
                         std::vector<double>& buffer) {
  if (target == out) {
    for (std::size_t i = 0; i < contribution.size(); ++i) {
      buffer[i] += contribution[i];
    }
    return;
  }
  const auto map = BroadcastIndexMap(out, target);
  for (std::size_t i = 0; i < contribution.size(); ++i) {
    buffer[map[i]] += contribution[i];
  }
}

// Adds the vector-Jacobian product of `node` for upstream gradient `g` into
// the buffers of its parents (nullptr for parents that need no gradient).
void Vjp(const Node& node, const std::vector<double>& g,
         std::vector<std::vector<double>*>& parent_grads) {
  const auto& parents = node.parents();
  const auto& y = node.value().values();
  const Shape& out = node.shape();
  switch (node.primitive()) {
    case Primitive::kLeaf:
      return;
    case Primitive::kMatMul: {
      const auto& a = parents[0]->value().values();
      const auto& b = parents[1]->value().values();
      const std::size_t m = parents[0]->shape()[0];
      const std::size_t n = parents[0]->shape()[1];
      const std::size_t p = parents[1]->shape()[1];
      if (auto* ga = parent_grads[0]) {
        // dA = G * B^T
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t k = 0; k < n; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < p; ++j) acc += g[i * p + j] * b[k * p + j];
            (*ga)[i * n + k] += acc;
          }
        }
      }
      if (auto* gb = parent_grads[1]) {
        // dB = A^T * G
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t k = 0; k < n; ++k) {
            const double aik = a[i * n + k];
            if (aik == 0.0) continue;
            double* row = gb->data() + k * p;
            const double* grow = g.data() + i * p;
            for (std::size_t j = 0; j < p; ++j) row[j] += aik * grow[j];
          }
        }
      }
      return;
    }
    case Primitive::kAdd:
    case Primitive::kSub:
    case Primitive::kMul:
    case Primitive::kDiv: {
      const Shape& sa = parents[0]->shape();
      const Shape& sb = parents[1]->shape();
      const auto& av = parents[0]->value().values();
      const auto& bv = parents[1]->value().values();
      const bool same = sa == out && sb == out;
      std::vector<std::size_t> ia, ib;
      if (!same) {
        ia = BroadcastIndexMap(out, sa);
        ib = BroadcastIndexMap(out, sb);
      }
      auto a_at = [&](std::size_t i) { return same ? av[i] : av[ia[i]]; };
      auto b_at = [&](std::size_t i) { return same ? bv[i] : bv[ib[i]]; };
      std::vector<double> c(g.size());
      if (auto* ga = parent_grads[0]) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          switch (node.primitive()) {
            case Primitive::kMul: c[i] = g[i] * b_at(i); break;
            case Primitive::kDiv: c[i] = g[i] / b_at(i); break;
            default: c[i] = g[i]; break;
          }
        }
        AccumulateBroadcast(out, sa, c, *ga);
      }
      if (auto* gb = parent_grads[1]) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          switch (node.primitive()) {
            case Primitive::kAdd: c[i] = g[i]; break;
            case Primitive::kSub: c[i] = -g[i]; break;
            case Primitive::kMul: c[i] = g[i] * a_at(i); break;
            default: {
              const double b = b_at(i);
              c[i] = -g[i] * a_at(i) / (b * b);
              break;
            }
          }
        }
        AccumulateBroadcast(out, sb, c, *gb);
      }
      return;
    }
    case Primitive::kScale:
    case Primitive::kRelu:
    case Primitive::kExp:
    case Primitive::kLn:
    case Primitive::kSquare: {
      auto* ga = parent_grads[0];
      if (!ga) return;
      const auto& x = parents[0]->value().values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        double d = 0.0;
        switch (node.primitive()) {
          case Primitive::kScale: d = node.attrs().constant; break;
          case Primitive::kRelu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
          case Primitive::kExp: d = y[i]; break;
          case Primitive::kLn: d = 1.0 / x[i]; break;
          default: d = 2.0 * x[i]; break;
        }
        (*ga)[i] += g[i] * d;
      }
      return;
    }
    case Primitive::kSum:
    case Primitive::kMean:
    case Primitive::kMax:
    case Primitive::kL2Norm:
    case Primitive::kLogSumExp: {
      auto* ga = parent_grads[0];
      if (!ga) return;
      const auto& x = parents[0]->value().values();
      const AxisSplit s = SplitAxis(parents[0]->shape(), node.attrs().axis,
                                    PrimitiveName(node.primitive()));
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          const std::size_t r = o * s.inner + i;
          const std::size_t base = o * s.extent * s.inner + i;
          auto at = [&](std::size_t j) { return base + j * s.inner; };
          switch (node.primitive()) {
            case Primitive::kSum:
              for (std::size_t j = 0; j < s.extent; ++j) (*ga)[at(j)] += g[r];
              break;
            case Primitive::kMean: {
              const double w = g[r] / static_cast<double>(s.extent);
              for (std::size_t j = 0; j < s.extent; ++j) (*ga)[at(j)] += w;
              break;
            }
            case Primitive::kMax: {
              std::size_t best = 0;
              for (std::size_t j = 1; j < s.extent; ++j) {
                if (x[at(j)] > x[at(best)]) best = j;
              }
              (*ga)[at(best)] += g[r];
              break;
            }
            case Primitive::kL2Norm: {
              if (y[r] == 0.0) break;  // subgradient 0 at the origin
              for (std::size_t j = 0; j < s.extent; ++j) {
                (*ga)[at(j)] += g[r] * x[at(j)] / y[r];
              }
              break;
            }
            default:
              for (std::size_t j = 0; j < s.extent; ++j) {
                (*ga)[at(j)] += g[r] * std::exp(x[at(j)] - y[r]);
              }
              break;
          }
        }
      }
      return;
    }
    case Primitive::kConcat: {
      const AxisSplit s = SplitAxis(out, node.attrs().axis, "concat");
      const std::size_t na =
          SplitAxis(parents[0]->shape(), node.attrs().axis, "concat").extent;
      const std::size_t nb = s.extent - na;
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t j = 0; j < s.extent; ++j) {
          for (std::size_t i = 0; i < s.inner; ++i) {
            const double gv = g[o * s.extent * s.inner + j * s.inner + i];
            if (j < na) {
              if (auto* ga = parent_grads[0]) {
                (*ga)[o * na * s.inner + j * s.inner + i] += gv;
              }
            } else if (auto* gb = parent_grads[1]) {
              (*gb)[o * nb * s.inner + (j - na) * s.inner + i] += gv;
            }
          }
        }
      }
      return;
    }
    case Primitive::kReshape: {
      if (auto* ga = parent_grads[0]) {
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
      }
      return;
    }
  }
}

}  // namespace

std::string_view PrimitiveName(Primitive primitive) {
  switch (primitive) {
    case Primitive::kLeaf: return "leaf";
    case Primitive::kMatMul: return "matmul";
    case Primitive::kAdd: return "add";
    case Primitive::kSub: return "sub";
    case Primitive::kMul: return "mul";
    case Primitive::kDiv: return "div";
    case Primitive::kScale: return "scale";
    case Primitive::kRelu: return "relu";
    case Primitive::kExp: return "exp";
    case Primitive::kLn: return "ln";
    case Primitive::kSquare: return "square";
    case Primitive::kSum: return "sum";
    case Primitive::kMean: return "mean";
    case Primitive::kMax: return "max";
    case Primitive::kL2Norm: return "l2norm";
    case Primitive::kLogSumExp: return "logsumexp";
    case Primitive::kConcat: return "concat";
    case Primitive::kReshape: return "reshape";
  }
  return "unknown";
}

Node::Node(Primitive primitive, std::vector<Var> parents, Tensor value,
           Attrs attrs, bool requires_grad)
    : primitive_(primitive),
      parents_(std::move(parents)),
      value_(std::move(value)),
      attrs_(std::move(attrs)),
      requires_grad_(requires_grad) {}

Var Leaf(Tensor value) {
  return std::make_shared<const Node>(Primitive::kLeaf, std::vector<Var>{},
                                      std::move(value), Attrs{}, true);
}

Var Constant(Tensor value) {
  return std::make_shared<const Node>(Primitive::kLeaf, std::vector<Var>{},
                                      std::move(value), Attrs{}, false);
}

Shape BroadcastShapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t da = k < a.size() ? a[a.size() - 1 - k] : 1;
    const std::size_t db = k < b.size() ? b[b.size() - 1 - k] : 1;
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("cannot broadcast " + ShapeToString(a) + " with " +
                       ShapeToString(b));
    }
    out[rank - 1 - k] = da == 1 ? db : da;
  }
  return out;
}

Var MatMul(const Var& a, const Var& b) {
  RequireNonNull(a, "matmul");
  RequireNonNull(b, "matmul");
  if (a->shape().size() != 2 || b->shape().size() != 2 ||
      a->shape()[1] != b->shape()[0]) {
    throw ShapeError("matmul: incompatible shapes " +
                     ShapeToString(a->shape()) + " x " +
                     ShapeToString(b->shape()));
  }
  const std::size_t m = a->shape()[0];
  const std::size_t n = a->shape()[1];
  const std::size_t p = b->shape()[1];
  const auto& av = a->value().values();
  const auto& bv = b->value().values();
  std::vector<double> data(m * p, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = data.data() + i * p;
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = av[i * n + k];
      if (aik == 0.0) continue;
      const double* brow = bv.data() + k * p;
      for (std::size_t j = 0; j < p; ++j) row[j] += aik * brow[j];
    }
  }
  return MakeNode(Primitive::kMatMul, {a, b}, {m, p}, std::move(data));
}

Var Add(const Var& a, const Var& b) {
  return Binary(Primitive::kAdd, a, b, [](double x, double y) { return x + y; });
}

Var Sub(const Var& a, const Var& b) {
  return Binary(Primitive::kSub, a, b, [](double x, double y) { return x - y; });
}

Var Mul(const Var& a, const Var& b) {
  return Binary(Primitive::kMul, a, b, [](double x, double y) { return x * y; });
}

Var Div(const Var& a, const Var& b) {
  RequireNonNull(b, "div");
  for (double v : b->value().values()) {
    if (v == 0.0) throw NumericError("div: division by zero");
  }
  return Binary(Primitive::kDiv, a, b, [](double x, double y) { return x / y; });
}

Var Scale(const Var& a, double factor) {
  Attrs attrs;
  attrs.constant = factor;
  return Unary(Primitive::kScale, a, [factor](double x) { return factor * x; },
               attrs);
}

Var Relu(const Var& a) {
  return Unary(Primitive::kRelu, a, [](double x) { return x > 0.0 ? x : 0.0; });
}

Var Exp(const Var& a) {
  return Unary(Primitive::kExp, a, [](double x) { return std::exp(x); });
}

Var Ln(const Var& a) {
  RequireNonNull(a, "ln");
  for (double v : a->value().values()) {
    if (v <= 0.0) {
      throw NumericError("ln: non-positive operand " + std::to_string(v));
    }
  }
  return Unary(Primitive::kLn, a, [](double x) { return std::log(x); });
}

Var Square(const Var& a) {
  return Unary(Primitive::kSquare, a, [](double x) { return x * x; });
}

Var Sum(const Var& a, int axis) {
  return Reduce(Primitive::kSum, a, axis, [](const std::vector<double>& lane) {
    double acc = 0.0;
    for (double x : lane) acc += x;
    return acc;
  });
}

Var Mean(const Var& a, int axis) {
  return Reduce(Primitive::kMean, a, axis, [](const std::vector<double>& lane) {
    double acc = 0.0;
    for (double x : lane) acc += x;
    return acc / static_cast<double>(lane.size());
  });
}

Var Max(const Var& a, int axis) {
  return Reduce(Primitive::kMax, a, axis, [](const std::vector<double>& lane) {
    return *std::max_element(lane.begin(), lane.end());
  });
}

Var L2Norm(const Var& a, int axis) {
  return Reduce(Primitive::kL2Norm, a, axis,
                [](const std::vector<double>& lane) {
                  double acc = 0.0;
                  for (double x : lane) acc += x * x;
                  return std::sqrt(acc);
                });
}

Var LogSumExp(const Var& a, int axis) {
  return Reduce(Primitive::kLogSumExp, a, axis, LaneLogSumExp);
}

Var Concat(const Var& a, const Var& b, int axis) {
  RequireNonNull(a, "concat");
  RequireNonNull(b, "concat");
  const Shape& sa = a->shape();
  const Shape& sb = b->shape();
  if (sa.size() != sb.size() || sa.empty()) {
    throw ShapeError("concat: rank mismatch " + ShapeToString(sa) + " vs " +
                     ShapeToString(sb));
  }
  const AxisSplit xa = SplitAxis(sa, axis, "concat");
  const AxisSplit xb = SplitAxis(sb, axis, "concat");
  if (xa.reduced != xb.reduced) {
    throw ShapeError("concat: shapes " + ShapeToString(sa) + " and " +
                     ShapeToString(sb) + " differ off the concat axis");
  }
  const int rank = static_cast<int>(sa.size());
  const std::size_t axis_index = static_cast<std::size_t>(axis < 0 ? axis + rank : axis);
  Shape out = sa;
  out[axis_index] = sa[axis_index] + sb[axis_index];
  const std::size_t n = xa.extent + xb.extent;
  const auto& av = a->value().values();
  const auto& bv = b->value().values();
  std::vector<double> data(NumElements(out));
  for (std::size_t o = 0; o < xa.outer; ++o) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < xa.inner; ++i) {
        data[o * n * xa.inner + j * xa.inner + i] =
            j < xa.extent
                ? av[o * xa.extent * xa.inner + j * xa.inner + i]
                : bv[o * xb.extent * xa.inner + (j - xa.extent) * xa.inner + i];
      }
    }
  }
  Attrs attrs;
  attrs.axis = static_cast<int>(axis_index);
  return MakeNode(Primitive::kConcat, {a, b}, out, std::move(data), attrs);
}

Var Reshape(const Var& a, Shape shape) {
  RequireNonNull(a, "reshape");
  if (NumElements(shape) != a->value().size()) {
    throw ShapeError("reshape: cannot view " + ShapeToString(a->shape()) +
                     " as " + ShapeToString(shape));
  }
  Attrs attrs;
  attrs.shape = shape;
  std::vector<double> data = a->value().values();
  return MakeNode(Primitive::kReshape, {a}, std::move(shape), std::move(data),
                  attrs);
}

Var Apply(Primitive primitive, std::span<const Var> inputs,
          const Attrs& attrs) {
  const bool binary =
      primitive == Primitive::kMatMul || primitive == Primitive::kAdd ||
      primitive == Primitive::kSub || primitive == Primitive::kMul ||
      primitive == Primitive::kDiv || primitive == Primitive::kConcat;
  const std::size_t arity = binary ? 2 : 1;
  if (primitive == Primitive::kLeaf) {
    throw Error("apply: leaves are created with Leaf() or Constant()");
  }
  if (inputs.size() != arity) {
    throw ShapeError(std::string(PrimitiveName(primitive)) + " expects " +
                     std::to_string(arity) + " input(s), got " +
                     std::to_string(inputs.size()));
  }
  switch (primitive) {
    case Primitive::kMatMul: return MatMul(inputs[0], inputs[1]);
    case Primitive::kAdd: return Add(inputs[0], inputs[1]);
    case Primitive::kSub: return Sub(inputs[0], inputs[1]);
    case Primitive::kMul: return Mul(inputs[0], inputs[1]);
    case Primitive::kDiv: return Div(inputs[0], inputs[1]);
    case Primitive::kConcat: return Concat(inputs[0], inputs[1], attrs.axis);
    case Primitive::kScale: return Scale(inputs[0], attrs.constant);
    case Primitive::kRelu: return Relu(inputs[0]);
    case Primitive::kExp: return Exp(inputs[0]);
    case Primitive::kLn: return Ln(inputs[0]);
    case Primitive::kSquare: return Square(inputs[0]);
    case Primitive::kSum: return Sum(inputs[0], attrs.axis);
    case Primitive::kMean: return Mean(inputs[0], attrs.axis);
    case Primitive::kMax: return Max(inputs[0], attrs.axis);
    case Primitive::kL2Norm: return L2Norm(inputs[0], attrs.axis);
    case Primitive::kLogSumExp: return LogSumExp(inputs[0], attrs.axis);
    case Primitive::kReshape: return Reshape(inputs[0], attrs.shape);
    case Primitive::kLeaf: break;
  }
  throw Error("apply: unsupported primitive");
}

bool Gradients::Contains(const Var& node) const {
  return node && grads_.count(node.get()) > 0;
}

const Tensor& Gradients::Of(const Var& node) const {
  if (!node) throw Error("gradient requested for a null node");
  const auto it = grads_.find(node.get());
  if (it == grads_.end()) {
    throw Error("node (" + std::string(PrimitiveName(node->primitive())) +
                ", shape " + ShapeToString(node->shape()) +
                ") is not connected to the loss or does not require a gradient");
  }
  return it->second;
}

Gradients Backward(const Var& loss) {
  if (!loss) throw Error("backward: null loss");
  if (loss->value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " +
                     ShapeToString(loss->shape()));
  }
  Gradients result;
  if (!loss->requires_grad()) return result;

  // Post-order DFS restricted to nodes that carry gradients.
  std::vector<const Node*> order;
  std::unordered_map<const Node*, bool> visited;
  std::vector<std::pair<const Node*, std::size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  visited[loss.get()] = true;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents().size()) {
      const Node* parent = node->parents()[next++].get();
      if (parent->requires_grad() && !visited[parent]) {
        visited[parent] = true;
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::unordered_map<const Node*, std::vector<double>> buffers;
  buffers[loss.get()] = std::vector<double>(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Node* node = *it;
    auto& g = buffers[node];
    if (g.empty()) g.assign(node->value().size(), 0.0);
    std::vector<std::vector<double>*> parent_grads;
    for (const Var& parent : node->parents()) {
      if (!parent->requires_grad()) {
        parent_grads.push_back(nullptr);
        continue;
      }
      auto& pg = buffers[parent.get()];
      if (pg.empty()) pg.assign(parent->value().size(), 0.0);
      parent_grads.push_back(&pg);
    }
    Vjp(*node, g, parent_grads);
  }
  for (const Node* node : order) {
    try {
      result.grads_.emplace(node, Tensor(node->shape(), std::move(buffers[node])));
    } catch (const NumericError& e) {
      throw NumericError(std::string("backward: non-finite gradient at ") +
                         std::string(PrimitiveName(node->primitive())) +
                         " node: " + e.what());
    }
  }
  return result;
}

}  // namespace uenl
