#include <cmath>
#include <string>

#include "uenl/errors.h"
#include "uenl/train.h"

namespace uenl {

void SgdStep(TensorMap& params, const TensorMap& grads, OptState& state, double lr,
             double momentum, double weight_decay) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  for (const auto& [name, grad] : grads) {
    const auto it = params.find(name);
    if (it == params.end()) throw ShapeError("gradient for unknown parameter " + name);
    Tensor& theta = it->second;
    if (grad.shape() != theta.shape()) {
      throw ShapeError("gradient for " + name + " has shape " +
                       ShapeToString(grad.shape()) + ", parameter has " +
                       ShapeToString(theta.shape()));
    }
    for (double g : grad.values()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient for " + name);
    }
    auto [v_it, inserted] = state.try_emplace(name, Tensor::Zeros(theta.shape()));
    if (!inserted && v_it->second.shape() != theta.shape()) {
      throw ShapeError("momentum buffer for " + name + " has the wrong shape");
    }
    std::vector<double> v(v_it->second.values());
    std::vector<double> t(theta.values());
    for (std::size_t i = 0; i < t.size(); ++i) {
      v[i] = momentum * v[i] - lr * (grad[i] + weight_decay * t[i]);
      t[i] += v[i];
    }
    v_it->second = Tensor(theta.shape(), std::move(v));
    theta = Tensor(theta.shape(), std::move(t));
  }
}

double LrAtEpoch(std::size_t epoch, double base_lr, std::span<const std::size_t> drops) {
  double lr = base_lr;
  for (std::size_t d : drops) {
    if (d <= epoch) lr /= 10.0;
  }
  return lr;
}

}  // namespace uenl
