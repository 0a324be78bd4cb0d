#include "uenl/loss.h"

#include <string>
#include <vector>

#include "uenl/errors.h"

namespace uenl {
namespace {

void CheckLogits(const Var& logits, Labels labels) {
  if (logits->shape().size() != 2) {
    throw ShapeError("logits must be B x k, got " +
                     ShapeToString(logits->shape()));
  }
  const std::size_t batch = logits->shape()[0];
  const std::size_t k = logits->shape()[1];
  if (labels.size() != batch) {
    throw ShapeError("got " + std::to_string(labels.size()) +
                     " labels for a batch of " + std::to_string(batch));
  }
  if (batch == 0) throw ShapeError("loss over an empty batch");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw Error("label " + std::to_string(labels[i]) + " at row " +
                  std::to_string(i) + " is outside [0, " + std::to_string(k) +
                  ")");
    }
  }
}

void CheckPositive(const Var& u, const char* what) {
  for (double v : u->value().values()) {
    if (!(v > 0.0)) {
      throw NumericError(std::string(what) + " must be strictly positive, got " +
                         std::to_string(v));
    }
  }
}

// Mean over rows of logsumexp(z) - z[y].
Var CrossEntropyFromLogits(const Var& z, Labels labels) {
  const std::size_t batch = z->shape()[0];
  const std::size_t k = z->shape()[1];
  std::vector<double> onehot(batch * k, 0.0);
  for (std::size_t i = 0; i < batch; ++i) {
    onehot[i * k + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  const Var picked = Sum(Mul(z, Constant(Tensor({batch, k}, std::move(onehot)))), 1);
  return Mean(Sub(LogSumExp(z, 1), picked));
}

Var AsColumn(const Var& v) {
  return Reshape(v, {v->value().size(), 1});
}

LossBreakdown Compose(const Var& logits, const Var& u, const Var& u_hat,
                      Labels labels, const UenlOptions& options) {
  LossBreakdown out;
  out.lambda = options.lambda;
  const Var temperature =
      options.uhat_scale == 1.0 ? u_hat : Scale(u_hat, options.uhat_scale);
  out.ce = CeWithTemperature(NormalizeLogits(logits), temperature, labels);
  out.kl = KlRegularizer(u, options.kl_form);
  out.total = Add(out.ce, Scale(out.kl, options.lambda));
  out.per_sample_uhat = temperature->value();
  return out;
}

}  // namespace

Var NormalizeLogits(const Var& logits) {
  if (logits->shape().size() != 2) {
    throw ShapeError("logits must be B x k, got " +
                     ShapeToString(logits->shape()));
  }
  const std::size_t batch = logits->shape()[0];
  const Var floor = Constant(Tensor::Full({batch, 1}, kLogitNormEpsilon));
  const Var norm = Max(Concat(AsColumn(L2Norm(logits, 1)), floor, 1), 1);
  return Div(logits, AsColumn(norm));
}

Var ResampleUncertainty(const Var& u, const Tensor& noise) {
  if (u->shape().size() != 2 || noise.shape() != u->shape()) {
    throw ShapeError("noise shape " + ShapeToString(noise.shape()) +
                     " does not match uncertainty shape " +
                     ShapeToString(u->shape()));
  }
  CheckPositive(u, "uncertainty");
  std::vector<double> squared(noise.size());
  for (std::size_t i = 0; i < noise.size(); ++i) squared[i] = noise[i] * noise[i];
  const Var raw = Sum(Mul(u, Constant(Tensor(noise.shape(), std::move(squared)))), 1);
  // Floor via max(raw, 1e-6) so the gradient still flows wherever raw wins.
  const std::size_t batch = u->shape()[0];
  const Var floor = Constant(Tensor::Full({batch, 1}, kMinResampledUncertainty));
  return Reshape(Max(Concat(AsColumn(raw), floor, 1), 1), {batch});
}

Resampled ResampleUncertainty(const Var& u, RngStream& rng) {
  Tensor noise = SampleStandardNormal(rng, u->shape());
  Var u_hat = ResampleUncertainty(u, noise);
  return {std::move(u_hat), std::move(noise)};
}

Var CeWithTemperature(const Var& normalized_logits, const Var& u_hat,
                      Labels labels) {
  CheckLogits(normalized_logits, labels);
  const std::size_t batch = normalized_logits->shape()[0];
  if (u_hat->value().size() != batch) {
    throw ShapeError("expected one temperature per row, got shape " +
                     ShapeToString(u_hat->shape()));
  }
  CheckPositive(u_hat, "temperature");
  return CrossEntropyFromLogits(Div(normalized_logits, AsColumn(u_hat)), labels);
}

Var KlRegularizer(const Var& u, KlForm form) {
  if (u->shape().size() != 2) {
    throw ShapeError("uncertainty must be B x delta, got " +
                     ShapeToString(u->shape()));
  }
  CheckPositive(u, "uncertainty");
  const Var one = Constant(Tensor::Scalar(1.0));
  const Var per_dim =
      form == KlForm::kVariance
          ? Sub(Sub(u, Ln(u)), one)
          : Sub(Sub(Square(u), Scale(Ln(u), 2.0)), one);
  return Mean(Sum(Scale(per_dim, 0.5), 1));
}

void UenlOptions::Validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(uhat_scale > 0.0)) throw ConfigError("uhat_scale must be > 0");
  if (pinned_temperature && !(*pinned_temperature > 0.0)) {
    throw ConfigError("pinned temperature must be > 0");
  }
}

LossBreakdown UenlTotal(const Var& logits, const Var& u, Labels labels,
                        const UenlOptions& options, const Tensor& noise) {
  options.Validate();
  if (options.pinned_temperature) {
    const Var fixed = Constant(Tensor::Full({logits->shape().at(0)},
                                            *options.pinned_temperature));
    return Compose(logits, u, fixed, labels, options);
  }
  return Compose(logits, u, ResampleUncertainty(u, noise), labels, options);
}

LossBreakdown UenlTotal(const Var& logits, const Var& u, Labels labels,
                        const UenlOptions& options, RngStream& rng) {
  options.Validate();
  if (options.pinned_temperature) {
    return UenlTotal(logits, u, labels, options, Tensor());
  }
  return UenlTotal(logits, u, labels, options,
                   SampleStandardNormal(rng, u->shape()));
}

Var PlainCe(const Var& logits, Labels labels) {
  CheckLogits(logits, labels);
  return CrossEntropyFromLogits(logits, labels);
}

Var LogitNormCe(const Var& logits, Labels labels, double temperature) {
  if (!(temperature > 0.0)) {
    throw ConfigError("LogitNorm temperature must be > 0");
  }
  CheckLogits(logits, labels);
  const std::size_t batch = logits->shape()[0];
  const Var t = Constant(Tensor::Full({batch, 1}, temperature));
  return CrossEntropyFromLogits(Div(NormalizeLogits(logits), t), labels);
}

}  // namespace uenl
