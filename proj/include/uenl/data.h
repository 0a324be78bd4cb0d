#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "uenl/tensor.h"

namespace uenl {

// Per-feature affine statistics: standardized = (raw - mean) / std.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> std;

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

inline constexpr double kMinFeatureStd = 1e-8;

// N x D features with optional zero-based labels. When `normalization` is
// set the features are already standardized with those statistics.
struct Dataset {
  std::string name;
  Tensor features;
  std::optional<std::vector<int>> labels;
  std::optional<Normalization> normalization;

  std::size_t size() const { return features.rank() == 2 ? features.dim(0) : 0; }
  std::size_t dim() const { return features.rank() == 2 ? features.dim(1) : 0; }
  // Number of classes implied by the largest label, 0 when unlabeled.
  int num_classes() const;

  // Throws DataError on a shape mismatch, non-finite feature or negative
  // label.
  void Validate() const;
};

// Selects rows of a dataset, keeping labels and normalization.
Dataset Subset(const Dataset& data, std::span<const std::size_t> rows,
               std::string name);

// --- Synthetic generators. Each is a pure function of its arguments.

// n_per_class samples of N(mean_c, sigma^2 I) for each row c of `means`,
// class-major order, labels 0..k-1.
Dataset GenGaussianClusters(const Tensor& means, std::size_t n_per_class,
                            double sigma, std::uint64_t seed);

// k x D class means with coordinates uniform in [-scale, scale].
Tensor RandomClusterMeans(std::size_t k, std::size_t d, double scale,
                          std::uint64_t seed);

// N(0, 1) features in the space standardized by `id_stats`, unlabeled and
// marked as standardized.
Dataset GenGaussianNoiseOod(std::size_t n, const Normalization& id_stats,
                            std::uint64_t seed);

// Uniform features on [low, high]^D in the space standardized by
// `id_stats`, unlabeled and marked as standardized.
Dataset GenUniformOod(std::size_t n, const Normalization& id_stats, double low,
                      double high, std::uint64_t seed);

// Raw-space Gaussian clusters at `means + shift`, unlabeled.
Dataset GenShiftedGaussianOod(const Tensor& means, double shift,
                              std::size_t n_per_class, double sigma,
                              std::uint64_t seed);

// --- Normalization.

Normalization ComputeNormalization(const Tensor& features);

// Applies `stats` (or statistics computed from `data` when absent). Data
// already standardized with the same statistics is returned unchanged;
// data standardized with different statistics is rejected.
Dataset Standardize(const Dataset& data,
                    const std::optional<Normalization>& stats = std::nullopt);

// --- Batching.

// Row order for one epoch: a Fisher-Yates permutation seeded from
// (shuffle_seed, epoch).
std::vector<std::size_t> EpochPermutation(std::size_t n, std::uint64_t shuffle_seed,
                                          std::uint64_t epoch);

struct Batch {
  Tensor features;
  std::vector<int> labels;
  std::vector<std::size_t> rows;
};

// Consecutive batches over one epoch's permutation; the final batch may be
// smaller than batch_size.
class BatchIter {
 public:
  BatchIter(const Dataset& data, std::size_t batch_size,
            std::uint64_t shuffle_seed, std::uint64_t epoch);

  std::size_t num_batches() const;
  std::optional<Batch> Next();

 private:
  const Dataset& data_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t position_ = 0;
};

// --- IDX files: big-endian magic 0x0000 08 nd followed by nd uint32 dims
// and the unsigned-byte payload.

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;
};

IdxArray ParseIdx(std::span<const std::uint8_t> file, const std::string& source);
IdxArray ReadIdxFile(const std::filesystem::path& path);
std::vector<std::uint8_t> EncodeIdx(const IdxArray& array);
void WriteIdxFile(const std::filesystem::path& path, const IdxArray& array);

// Images (N x d1 x ... ) flattened to N x prod(d_i) with pixels / 255, plus
// optional labels from a rank-1 label file of the same length.
Dataset LoadIdx(const std::filesystem::path& images,
                const std::optional<std::filesystem::path>& labels,
                std::string name);

// --- CSV: header "x1,...,xD[,label]", one sample per line, doubles in
// shortest round-trip form.

Dataset ReadCsv(std::istream& in, bool has_labels, std::string name,
                const std::string& source = "<stream>");
Dataset LoadCsv(const std::filesystem::path& path, bool has_labels);
void WriteCsv(std::ostream& out, const Dataset& data);
void SaveCsv(const std::filesystem::path& path, const Dataset& data);

}  // namespace uenl
