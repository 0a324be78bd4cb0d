#include <cmath>
#include <string>

#include "uenl/data.h"
#include "uenl/errors.h"
#include "uenl/rng.h"

namespace uenl {
namespace {

void CheckStats(const Normalization& stats) {
  if (stats.mean.empty() || stats.mean.size() != stats.std.size()) {
    throw DataError("normalization statistics are empty or mismatched");
  }
}

// Standardized-space samples `z` returned as a dataset marked standardized.
Dataset Standardized(std::string name, std::size_t n, const Normalization& stats,
                     std::vector<double> z) {
  Dataset out;
  out.name = std::move(name);
  out.features = Tensor({n, stats.mean.size()}, std::move(z));
  out.normalization = stats;
  return out;
}

}  // namespace

Dataset GenGaussianClusters(const Tensor& means, std::size_t n_per_class,
                            double sigma, std::uint64_t seed) {
  if (means.rank() != 2 || means.dim(0) == 0 || means.dim(1) == 0) {
    throw DataError("cluster means must be a non-empty k x D matrix");
  }
  if (!(sigma >= 0.0)) throw DataError("cluster sigma must be >= 0");
  const std::size_t k = means.dim(0);
  const std::size_t d = means.dim(1);
  RngStream rng(seed, "gaussian-clusters");
  std::vector<double> x;
  x.reserve(k * n_per_class * d);
  std::vector<int> labels;
  labels.reserve(k * n_per_class);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        x.push_back(means.at(c, j) + sigma * rng.StandardNormal());
      }
      labels.push_back(static_cast<int>(c));
    }
  }
  Dataset out;
  out.name = "gaussian_clusters";
  out.features = Tensor({k * n_per_class, d}, std::move(x));
  out.labels = std::move(labels);
  return out;
}

Tensor RandomClusterMeans(std::size_t k, std::size_t d, double scale,
                          std::uint64_t seed) {
  if (k == 0 || d == 0) throw DataError("cluster means need k, D >= 1");
  RngStream rng(seed, "cluster-means");
  return SampleUniform(rng, {k, d}, -scale, scale);
}

Dataset GenGaussianNoiseOod(std::size_t n, const Normalization& id_stats,
                            std::uint64_t seed) {
  CheckStats(id_stats);
  RngStream rng(seed, "gaussian-noise-ood");
  return Standardized("gaussian_noise", n, id_stats,
                      SampleStandardNormal(rng, {n, id_stats.mean.size()}).values());
}

Dataset GenUniformOod(std::size_t n, const Normalization& id_stats, double low,
                      double high, std::uint64_t seed) {
  CheckStats(id_stats);
  if (!(high > low)) throw DataError("uniform OOD needs high > low");
  RngStream rng(seed, "uniform-ood");
  return Standardized("uniform", n, id_stats,
                      SampleUniform(rng, {n, id_stats.mean.size()}, low, high).values());
}

Dataset GenShiftedGaussianOod(const Tensor& means, double shift,
                              std::size_t n_per_class, double sigma,
                              std::uint64_t seed) {
  std::vector<double> shifted(means.values());
  for (double& v : shifted) v += shift;
  Dataset out = GenGaussianClusters(Tensor(means.shape(), std::move(shifted)),
                                    n_per_class, sigma, DeriveSeed(seed, 1));
  out.name = "shifted_gaussian";
  out.labels.reset();
  return out;
}

}  // namespace uenl
