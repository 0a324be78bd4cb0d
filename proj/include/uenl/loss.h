#pragma once

#include <optional>
#include <span>

#include "uenl/autodiff.h"
#include "uenl/rng.h"
#include "uenl/tensor.h"

namespace uenl {

// Class labels are zero-based indices into the logit vector.
using Labels = std::span<const int>;

inline constexpr double kLogitNormEpsilon = 1e-7;
inline constexpr double kMinResampledUncertainty = 1e-6;

// How a component of u parameterizes N(0, u) in the KL term.
enum class KlForm {
  kVariance,  // KL = 1/2 (u - ln u - 1)
  kStdDev,    // KL = 1/2 (u^2 - 2 ln u - 1)
};

// Row-wise p / max(||p||_2, 1e-7): exactly scale invariant for rows with
// norm above the floor, and zero rows map to zero rows.
Var NormalizeLogits(const Var& logits);

// u_hat = sum_i u_i * noise_i^2 per row, floored at 1e-6. `noise` is the
// B x delta standard-normal draw, held constant so the result is
// differentiable in u. Throws NumericError on non-positive u.
Var ResampleUncertainty(const Var& u, const Tensor& noise);

struct Resampled {
  Var u_hat;
  Tensor noise;
};

// Draws fresh noise from `rng` and resamples.
Resampled ResampleUncertainty(const Var& u, RngStream& rng);

// Mean over the batch of -log softmax(normalized / u_hat)[y], computed via
// logsumexp. `u_hat` holds one positive temperature per row.
Var CeWithTemperature(const Var& normalized_logits, const Var& u_hat,
                      Labels labels);

// Mean over the batch of sum_i KL(N(0, u_i) || N(0, 1)).
Var KlRegularizer(const Var& u, KlForm form = KlForm::kVariance);

struct UenlOptions {
  double lambda = 0.1;
  // Multiplies u_hat before it divides the normalized logits.
  double uhat_scale = 1.0;
  KlForm kl_form = KlForm::kVariance;
  // Replaces the resampled u_hat with this constant temperature.
  std::optional<double> pinned_temperature;

  void Validate() const;
};

struct LossBreakdown {
  Var total;
  Var ce;
  Var kl;
  double lambda = 0.0;
  Tensor per_sample_uhat;

  double total_value() const { return total->value().item(); }
  double ce_value() const { return ce->value().item(); }
  double kl_value() const { return kl->value().item(); }
};

// CE(normalize(p) / u_hat, y) + lambda * KL(u), with the noise drawn from
// `rng` (skipped when the temperature is pinned).
LossBreakdown UenlTotal(const Var& logits, const Var& u, Labels labels,
                        const UenlOptions& options, RngStream& rng);

// Same objective with frozen noise, for gradient checks.
LossBreakdown UenlTotal(const Var& logits, const Var& u, Labels labels,
                        const UenlOptions& options, const Tensor& noise);

// Cross-entropy on raw logits.
Var PlainCe(const Var& logits, Labels labels);

// Cross-entropy on normalize(p) / temperature.
Var LogitNormCe(const Var& logits, Labels labels, double temperature);

}  // namespace uenl
