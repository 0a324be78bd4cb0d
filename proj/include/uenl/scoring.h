#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "uenl/model.h"
#include "uenl/tensor.h"

namespace uenl {

// Every score is oriented so that higher means more in-distribution.

// max_c softmax(logits)_c, in (0, 1].
double MspScore(std::span<const double> logits);

// T * logsumexp(logits / T). Throws ConfigError when T <= 0.
double EnergyScore(std::span<const double> logits, double temperature);

// Row-wise versions over a B x k logit matrix.
std::vector<double> MspScores(const Tensor& logits);
std::vector<double> EnergyScores(const Tensor& logits, double temperature);

// Per-feature bounds observed on the training inputs.
struct InputRange {
  std::vector<double> low;
  std::vector<double> high;
};

InputRange ObservedRange(const Tensor& x);

struct OdinOptions {
  double temperature = 1000.0;
  double epsilon = 0.0014;
  // When set, a perturbed coordinate may not leave [low, high] unless the
  // original coordinate was already outside, in which case it may not move
  // further out.
  std::optional<InputRange> clamp;
};

// Perturbs x one signed step of size epsilon along the gradient of
// log max softmax(f(x) / T), then returns MSP of f(x~) / T per row.
std::vector<double> OdinScores(const Network& net, const ModelParams& params,
                               const Tensor& x, const OdinOptions& options);

// The perturbed inputs used by OdinScores.
Tensor OdinPerturb(const Network& net, const ModelParams& params,
                   const Tensor& x, const OdinOptions& options);

// -sum_i u_i from a deterministic eval-mode pass: the negated expectation
// of the resampled uncertainty.
std::vector<double> UncertaintyScores(const Network& net, const ModelParams& params,
                                      const Tensor& x);

enum class Decision { kInDistribution, kOutOfDistribution };

// In-distribution iff score >= threshold.
Decision Decide(double score, double threshold);

struct ScoreSet {
  std::string method;
  std::vector<double> id_scores;
  std::map<std::string, std::vector<double>> ood_scores;
};

// Writes rows (dataset, sample_index, method, score), ID rows under
// `id_name`. Throws NumericError if any score is non-finite.
void WriteScoresCsv(std::ostream& out, const std::vector<ScoreSet>& sets,
                    const std::string& id_name);

}  // namespace uenl
