#include <algorithm>
#include <cmath>
#include <string>

#include "uenl/data.h"
#include "uenl/errors.h"
#include "uenl/rng.h"

namespace uenl {

int Dataset::num_classes() const {
  if (!labels || labels->empty()) return 0;
  return *std::max_element(labels->begin(), labels->end()) + 1;
}

void Dataset::Validate() const {
  if (features.rank() != 2) {
    throw DataError(name + ": features must be N x D, got " +
                    ShapeToString(features.shape()));
  }
  if (labels) {
    if (labels->size() != size()) {
      throw DataError(name + ": " + std::to_string(labels->size()) + " labels for " +
                      std::to_string(size()) + " samples");
    }
    for (std::size_t i = 0; i < labels->size(); ++i) {
      if ((*labels)[i] < 0) {
        throw DataError(name + ": negative label at row " + std::to_string(i));
      }
    }
  }
  if (normalization && (normalization->mean.size() != dim() ||
                        normalization->std.size() != dim())) {
    throw DataError(name + ": normalization width does not match features");
  }
}

Dataset Subset(const Dataset& data, std::span<const std::size_t> rows,
               std::string name) {
  Dataset out;
  out.name = std::move(name);
  out.features = data.features.SelectRows(rows);
  if (data.labels) {
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (std::size_t r : rows) labels.push_back(data.labels->at(r));
    out.labels = std::move(labels);
  }
  out.normalization = data.normalization;
  return out;
}

Normalization ComputeNormalization(const Tensor& features) {
  if (features.rank() != 2 || features.dim(0) == 0) {
    throw DataError("normalization needs a non-empty N x D matrix");
  }
  const std::size_t n = features.dim(0);
  const std::size_t d = features.dim(1);
  Normalization stats{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += features.at(i, j);
  }
  for (double& m : stats.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = features.at(i, j) - stats.mean[j];
      stats.std[j] += c * c;
    }
  }
  for (double& s : stats.std) {
    s = std::max(std::sqrt(s / static_cast<double>(n)), kMinFeatureStd);
  }
  return stats;
}

Dataset Standardize(const Dataset& data, const std::optional<Normalization>& stats) {
  data.Validate();
  if (data.normalization) {
    if (stats && *stats != *data.normalization) {
      throw DataError(data.name + " is already standardized with other statistics");
    }
    return data;
  }
  const Normalization use = stats ? *stats : ComputeNormalization(data.features);
  if (use.mean.size() != data.dim() || use.std.size() != data.dim()) {
    throw DataError(data.name + ": normalization width " +
                    std::to_string(use.mean.size()) + " does not match D = " +
                    std::to_string(data.dim()));
  }
  std::vector<double> x(data.features.values());
  const std::size_t d = data.dim();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t j = i % d;
    x[i] = (x[i] - use.mean[j]) / std::max(use.std[j], kMinFeatureStd);
  }
  Dataset out = data;
  out.features = Tensor(data.features.shape(), std::move(x));
  out.normalization = use;
  return out;
}

std::vector<std::size_t> EpochPermutation(std::size_t n, std::uint64_t shuffle_seed,
                                          std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  RngStream rng(DeriveSeed(shuffle_seed, epoch), "shuffle");
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.UniformInt(i)]);
  }
  return order;
}

BatchIter::BatchIter(const Dataset& data, std::size_t batch_size,
                     std::uint64_t shuffle_seed, std::uint64_t epoch)
    : data_(data), batch_size_(batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  data.Validate();
  order_ = EpochPermutation(data.size(), shuffle_seed, epoch);
}

std::size_t BatchIter::num_batches() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

std::optional<Batch> BatchIter::Next() {
  if (position_ >= order_.size()) return std::nullopt;
  const std::size_t end = std::min(order_.size(), position_ + batch_size_);
  Batch batch;
  batch.rows.assign(order_.begin() + static_cast<std::ptrdiff_t>(position_),
                    order_.begin() + static_cast<std::ptrdiff_t>(end));
  batch.features = data_.features.SelectRows(batch.rows);
  if (data_.labels) {
    batch.labels.reserve(batch.rows.size());
    for (std::size_t r : batch.rows) batch.labels.push_back((*data_.labels)[r]);
  }
  position_ = end;
  return batch;
}

}  // namespace uenl
