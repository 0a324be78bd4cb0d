#pragma once

#include <map>
#include <string>
#include <vector>

#include "uenl/autodiff.h"
#include "uenl/rng.h"
#include "uenl/tensor.h"

namespace uenl {

enum class Mode { kTrain, kEval };

struct BackboneConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t embed_dim = 0;
  std::size_t num_classes = 0;
  double dropout_rate = 0.3;
  bool use_batchnorm = true;

  // Throws ConfigError on k < 2, zero dims or a rate outside [0, 1).
  void Validate() const;
};

struct UncertaintyHeadConfig {
  std::size_t embed_dim = 0;
  std::size_t delta = 32;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;
  // Predict one uncertainty value per sample and repeat it delta times
  // instead of predicting a delta-dimensional vector.
  bool scalar_uncertainty = false;

  void Validate() const;
};

using TensorMap = std::map<std::string, Tensor>;

// Trainable tensors (backbone and head) plus batch-norm running statistics,
// keyed by dotted names such as "backbone.0.weight" or
// "head.bn.running_var".
struct ModelParams {
  TensorMap trainable;
  TensorMap buffers;
};

// Leaf nodes for every trainable tensor of one forward pass.
using ParamVars = std::map<std::string, Var>;

ParamVars BindParams(const ModelParams& params);

struct BatchNormResult {
  Var output;
  // Pre-activations after normalization, before scale and shift.
  Var normalized;
  // Train mode only: running statistics after the momentum update.
  TensorMap updated_buffers;
};

// Batch normalization over axis 0. Train mode normalizes with the biased
// batch variance and folds the unbiased variance into the running estimate.
BatchNormResult BatchNorm(const Var& z, const Var& gamma, const Var& beta,
                          const Tensor& running_mean, const Tensor& running_var,
                          Mode mode, double momentum, double epsilon,
                          const std::string& buffer_prefix);

// Inverted dropout: survivors are scaled by 1 / (1 - rate).
Var Dropout(const Var& h, double rate, RngStream& rng);

struct BackboneOutput {
  Var logits;
  Var embedding;
  TensorMap updated_buffers;
};

struct HeadOutput {
  // B x delta, strictly positive.
  Var uncertainty;
  Var pre_activation;
  TensorMap updated_buffers;
};

// Plain tensors from an eval-mode pass.
struct ForwardOutput {
  Tensor logits;
  Tensor embedding;
  Tensor uncertainty;
};

// MLP backbone f(x) -> (logits p, embedding e) and uncertainty head
// g(e) = exp(BN(W e + b)).
//
// Layout: each hidden layer is linear -> [BN] -> relu -> dropout; the
// embedding layer is linear -> [BN] -> relu; logits come from a linear
// classifier on the embedding.
class Network {
 public:
  Network(BackboneConfig backbone, UncertaintyHeadConfig head);

  const BackboneConfig& backbone_config() const { return backbone_; }
  const UncertaintyHeadConfig& head_config() const { return head_; }

  // He-uniform weights (bound sqrt(6 / fan_in)), zero biases, BN scale 1 and
  // shift 0, running mean 0 and variance 1. Head weights start at zero so
  // the initial uncertainty is exactly 1.
  ModelParams InitParams(RngStream rng) const;

  // Closed form: for every linear layer in*out + out, plus 2*width per BN
  // layer. Running statistics are not counted.
  std::size_t NumTrainableParameters() const;

  // Throws ShapeError when `params` does not match the configuration.
  void CheckParams(const ModelParams& params) const;

  // `dropout_rng` may be null in eval mode.
  BackboneOutput Backbone(const ModelParams& params, const ParamVars& vars,
                          const Var& x, Mode mode,
                          RngStream* dropout_rng) const;

  HeadOutput Uncertainty(const ModelParams& params, const ParamVars& vars,
                         const Var& embedding, Mode mode) const;

  // Deterministic eval-mode pass over a B x input_dim batch.
  ForwardOutput Predict(const ModelParams& params, const Tensor& x) const;

 private:
  Var Linear(const ParamVars& vars, const std::string& name, const Var& h) const;

  BackboneConfig backbone_;
  UncertaintyHeadConfig head_;
};

// Applies train-mode running-statistic updates.
void CommitBuffers(ModelParams& params, const TensorMap& updates);

}  // namespace uenl
