#include "uenl/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "uenl/errors.h"

namespace uenl {
namespace {

// One-sided slopes disagreeing by more than this (relative) mark a kink.
constexpr double kKinkTolerance = 1e-3;

double Evaluate(const std::function<double(const Tensor&)>& f,
                const Tensor& x) {
  const double v = f(x);
  if (!std::isfinite(v)) throw NumericError("finite-difference check: f is non-finite");
  return v;
}

}  // namespace

GradCheckResult FiniteDiffCheck(const std::function<double(const Tensor&)>& f,
                                const Tensor& analytic, const Tensor& point,
                                double step) {
  if (!(step > 0.0)) throw Error("finite-difference step must be positive");
  if (analytic.shape() != point.shape()) {
    throw ShapeError("analytic gradient shape " +
                     ShapeToString(analytic.shape()) + " != point shape " +
                     ShapeToString(point.shape()));
  }
  GradCheckResult result;
  const double f0 = Evaluate(f, point);
  std::vector<double> x = point.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + step;
    const double f_plus = Evaluate(f, Tensor(point.shape(), x));
    x[i] = xi - step;
    const double f_minus = Evaluate(f, Tensor(point.shape(), x));
    x[i] = xi;
    const double central = (f_plus - f_minus) / (2.0 * step);
    const double forward = (f_plus - f0) / step;
    const double backward = (f0 - f_minus) / step;
    if (std::abs(forward - backward) >
        kKinkTolerance * std::max(1.0, std::abs(central))) {
      result.kink_coordinates.push_back(i);
      continue;
    }
    const double a = analytic[i];
    const double err = std::abs(a - central) / std::max(1.0, std::abs(a));
    result.max_relative_error = std::max(result.max_relative_error, err);
    ++result.checked;
  }
  return result;
}

GradCheckResult FiniteDiffCheck(const ScalarGraphFn& f, const Tensor& point,
                                double step) {
  const Var x = Leaf(point);
  const Var y = f(x);
  const Gradients grads = Backward(y);
  const Tensor analytic =
      grads.Contains(x) ? grads.Of(x) : Tensor::Zeros(point.shape());
  auto scalar = [&f](const Tensor& t) {
    return f(Constant(t))->value().item();
  };
  return FiniteDiffCheck(scalar, analytic, point, step);
}

}  // namespace uenl
