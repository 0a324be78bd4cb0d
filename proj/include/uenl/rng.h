#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "uenl/tensor.h"

namespace uenl {

// Counter-based generator: the n-th draw of a stream is a pure function of
// (seed, stream id, n). Named sub-streams ("init", "dropout", "resample",
// "shuffle", ...) keep each consumer's sequence stable when other consumers
// change how many numbers they draw.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);
  RngStream(std::uint64_t seed, std::string_view stream_name);

  // Independent child stream identified by name.
  RngStream Fork(std::string_view name) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t NextU64();
  // Uniform on the open interval (0, 1).
  double Uniform();
  double Uniform(double low, double high);
  // Uniform integer in [0, bound), bound >= 1.
  std::uint64_t UniformInt(std::uint64_t bound);
  double StandardNormal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_normal_;
};

// Stable 64-bit hash of a name (FNV-1a).
std::uint64_t HashName(std::string_view name);
// Mixes two 64-bit values into a well-distributed seed.
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t salt);

Tensor SampleStandardNormal(RngStream& rng, Shape shape);
Tensor SampleUniform(RngStream& rng, Shape shape, double low, double high);

}  // namespace uenl
