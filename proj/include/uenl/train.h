#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "uenl/checkpoint.h"
#include "uenl/config.h"
#include "uenl/data.h"
#include "uenl/model.h"

namespace uenl {

// Datasets for one experiment, all standardized with the ID training
// statistics.
struct PreparedData {
  Dataset train;
  Dataset test;
  std::vector<Dataset> ood;
  Normalization stats;
  std::size_t num_classes = 0;
  // Class means of the gaussian source.
  std::optional<Tensor> cluster_means;
};

// Generates or loads every dataset named by `spec`.
PreparedData PrepareData(const DataSpec& spec);

// Loads or generates one OOD set in the space standardized by `stats`.
Dataset PrepareOodSet(const OodSpec& ood, const DataSpec& spec, const Normalization& stats,
                      const std::optional<Tensor>& cluster_means);

// Raw-space copy of a standardized dataset (for export).
Dataset ToRawSpace(const Dataset& data);

// Per-parameter momentum buffers; missing entries start at zero.
using OptState = TensorMap;

// v <- m v - lr (g + wd theta); theta <- theta + v, for every tensor in
// `grads`. Only trainable tensors are passed in, so running statistics are
// never decayed. Throws ShapeError on a mismatch and NumericError naming the
// parameter on a non-finite gradient.
void SgdStep(TensorMap& params, const TensorMap& grads, OptState& state, double lr,
             double momentum, double weight_decay);

// base_lr * 10^-(number of drop epochs <= epoch).
double LrAtEpoch(std::size_t epoch, double base_lr, std::span<const std::size_t> drops);

// Index of the largest logit in each row.
std::vector<int> PredictLabels(const Tensor& logits);

// Trains the configured method and returns the final (or best-validation)
// model. Progress lines go to `log` when non-null. Throws NumericError with
// the epoch and batch index when the loss or a gradient is non-finite.
Checkpoint Train(const ExperimentConfig& config, const PreparedData& data,
                 std::ostream* log = nullptr);

}  // namespace uenl
