#include "uenl/scoring.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "uenl/errors.h"
#include "uenl/format.h"

namespace uenl {
namespace {

void CheckLogits(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("score over an empty logit vector");
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("score over non-finite logits");
  }
}

void CheckTemperature(double temperature) {
  if (!(temperature > 0.0)) {
    throw ConfigError("temperature must be > 0, got " + std::to_string(temperature));
  }
}

std::span<const double> Row(const Tensor& m, std::size_t i) {
  const std::size_t k = m.dim(1);
  return m.data().subspan(i * k, k);
}

void CheckMatrix(const Tensor& m) {
  if (m.rank() != 2) throw ShapeError("expected a matrix, got " + ShapeToString(m.shape()));
}

ParamVars ConstantParams(const ModelParams& params) {
  ParamVars vars;
  for (const auto& [name, value] : params.trainable) vars.emplace(name, Constant(value));
  return vars;
}

}  // namespace

double MspScore(std::span<const double> logits) {
  CheckLogits(logits);
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  return 1.0 / z;
}

double EnergyScore(std::span<const double> logits, double temperature) {
  CheckTemperature(temperature);
  CheckLogits(logits);
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp((v - m) / temperature);
  return m + temperature * std::log(z);
}

std::vector<double> MspScores(const Tensor& logits) {
  CheckMatrix(logits);
  std::vector<double> out(logits.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = MspScore(Row(logits, i));
  return out;
}

std::vector<double> EnergyScores(const Tensor& logits, double temperature) {
  CheckMatrix(logits);
  std::vector<double> out(logits.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = EnergyScore(Row(logits, i), temperature);
  }
  return out;
}

InputRange ObservedRange(const Tensor& x) {
  CheckMatrix(x);
  if (x.dim(0) == 0) throw ShapeError("range of an empty input set");
  const std::size_t d = x.dim(1);
  InputRange range{std::vector<double>(d, HUGE_VAL), std::vector<double>(d, -HUGE_VAL)};
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      range.low[j] = std::min(range.low[j], x.at(i, j));
      range.high[j] = std::max(range.high[j], x.at(i, j));
    }
  }
  return range;
}

Tensor OdinPerturb(const Network& net, const ModelParams& params, const Tensor& x,
                   const OdinOptions& options) {
  CheckTemperature(options.temperature);
  if (!(options.epsilon >= 0.0)) throw ConfigError("ODIN epsilon must be >= 0");
  CheckMatrix(x);
  if (options.epsilon == 0.0) return x;
  const std::size_t d = x.dim(1);
  if (options.clamp && (options.clamp->low.size() != d || options.clamp->high.size() != d)) {
    throw ShapeError("ODIN clamp range has the wrong width");
  }

  const Var input = Leaf(x);
  const BackboneOutput out =
      net.Backbone(params, ConstantParams(params), input, Mode::kEval, nullptr);
  const Var z = Scale(out.logits, 1.0 / options.temperature);
  const Tensor& zv = z->value();
  const std::size_t b = zv.dim(0);
  const std::size_t k = zv.dim(1);
  std::vector<double> onehot(b * k, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    const auto row = Row(zv, i);
    onehot[i * k + static_cast<std::size_t>(std::max_element(row.begin(), row.end()) -
                                            row.begin())] = 1.0;
  }
  // Rows are independent in eval mode, so the gradient of the batch sum
  // holds each row's own input gradient.
  const Var log_msp = Sub(Sum(Mul(z, Constant(Tensor({b, k}, std::move(onehot)))), 1),
                          LogSumExp(z, 1));
  const Gradients grads = Backward(Sum(log_msp));
  const Tensor& g = grads.Of(input);

  std::vector<double> perturbed(x.values());
  for (std::size_t i = 0; i < perturbed.size(); ++i) {
    const double step = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
    double v = perturbed[i] + options.epsilon * step;
    if (options.clamp) {
      const std::size_t j = i % d;
      const double lo = std::min(options.clamp->low[j], x[i]);
      const double hi = std::max(options.clamp->high[j], x[i]);
      v = std::clamp(v, lo, hi);
    }
    perturbed[i] = v;
  }
  return Tensor(x.shape(), std::move(perturbed));
}

std::vector<double> OdinScores(const Network& net, const ModelParams& params,
                               const Tensor& x, const OdinOptions& options) {
  const Tensor perturbed = OdinPerturb(net, params, x, options);
  const Tensor logits = net.Predict(params, perturbed).logits;
  std::vector<double> scaled(logits.values());
  for (double& v : scaled) v /= options.temperature;
  return MspScores(Tensor(logits.shape(), std::move(scaled)));
}

std::vector<double> UncertaintyScores(const Network& net, const ModelParams& params,
                                      const Tensor& x) {
  const Tensor u = net.Predict(params, x).uncertainty;
  std::vector<double> out(u.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    double total = 0.0;
    for (double v : Row(u, i)) total += v;
    out[i] = -total;
  }
  return out;
}

Decision Decide(double score, double threshold) {
  if (!std::isfinite(score) || !std::isfinite(threshold)) {
    throw NumericError("decision over a non-finite score or threshold");
  }
  return score >= threshold ? Decision::kInDistribution : Decision::kOutOfDistribution;
}

void WriteScoresCsv(std::ostream& out, const std::vector<ScoreSet>& sets,
                    const std::string& id_name) {
  out << "dataset,sample_index,method,score\n";
  auto rows = [&](const std::string& dataset, const std::string& method,
                  const std::vector<double>& scores) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!std::isfinite(scores[i])) {
        throw NumericError(method + " score " + std::to_string(i) + " on " + dataset +
                           " is not finite");
      }
      out << dataset << ',' << i << ',' << method << ',' << FormatDouble(scores[i]) << '\n';
    }
  };
  for (const ScoreSet& set : sets) {
    rows(id_name, set.method, set.id_scores);
    for (const auto& [name, scores] : set.ood_scores) rows(name, set.method, scores);
  }
}

}  // namespace uenl
