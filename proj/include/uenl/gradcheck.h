#pragma once

#include <functional>
#include <vector>

#include "uenl/autodiff.h"
#include "uenl/tensor.h"

namespace uenl {

struct GradCheckResult {
  // max over checked coordinates of |analytic - central| / max(1, |analytic|)
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  // Coordinates where one-sided differences disagree (a kink such as relu at
  // 0); they are excluded from max_relative_error.
  std::vector<std::size_t> kink_coordinates;
};

// Builds a scalar graph from a leaf input.
using ScalarGraphFn = std::function<Var(const Var&)>;

// Compares the reverse-mode gradient of `f` at `point` with central
// differences of step `step`. Throws NumericError when f is non-finite.
GradCheckResult FiniteDiffCheck(const ScalarGraphFn& f, const Tensor& point,
                                double step);

// Same check against a caller-supplied analytic gradient for a plain scalar
// function.
GradCheckResult FiniteDiffCheck(const std::function<double(const Tensor&)>& f,
                                const Tensor& analytic, const Tensor& point,
                                double step);

}  // namespace uenl
